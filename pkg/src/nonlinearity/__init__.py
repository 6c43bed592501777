# Nonlinearity package
from .nonlinearity import (
    Family,
    LogValue,
    Nonlinearity,
    asymptote_F_inv,
    eval_f,
    eval_f_prime,
    eval_F,
    eval_F_inv_log,
    eval_log_f,
    eval_log_f_prime,
    eval_log_F,
    fprimeF,
    inverse_quasi_scaling,
    log_f_array,
    one_minus_fprimeF,
    quasi_scaling,
    threshold_l,
)
from .table import CoefficientTable, coefficient_table
