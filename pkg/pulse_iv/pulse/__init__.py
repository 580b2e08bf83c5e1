from pulse_iv.pulse.dual import PulseConfig, PulseMessage, PulseResult, lambda_star_search, pulse_estimate
from pulse_iv.pulse.primal import primal_solve, t_star
