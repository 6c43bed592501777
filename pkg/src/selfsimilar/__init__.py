# Selfsimilar package
from .energy import EnergyRecord, LedgerRow, energy, energy_inequality_check, energy_series
from .frame import SelfSimilarFrame, build_frames, frame_phi, to_frame
from .identities import leibniz_check, lipschitz_log_v, stationary_identity
from .residual import residual_series, residual_veq, s_derivative, veq_norm
