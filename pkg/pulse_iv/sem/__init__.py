from pulse_iv.sem.model import (
    InterventionSpec,
    PopulationMoments,
    SemModel,
    VariableRole,
    load_sem,
    population_moments,
    sem_sample,
    sem_solve,
)
from pulse_iv.sem.population import (
    population_kclass,
    population_pulse_underid,
    superiority_interval,
    wcmspe_curve_e1,
    worst_case_mspe,
)
