# ODE package
from .ode import (
    OdeRun,
    ode_blowup_time,
    ode_exact,
    ode_exact_from_gap,
    ode_integrate,
    ode_log_blowup_time,
)
