from dataclasses import replace

from pulse_iv.data.design import DesignView
from pulse_iv.estimators.dispatch import estimate
from pulse_iv.estimators.spec import Diagnostics, EstimateResult, EstimatorKind, EstimatorSpec
from pulse_iv.pulse.dual import PulseConfig, pulse_estimate


def fit(view: DesignView, spec: EstimatorSpec, pulse_config: PulseConfig | None = None) -> EstimateResult:
    """Run any estimator; PULSE uses pulse_config with the level overridden by spec.parameter."""
    match spec.kind:
        case EstimatorKind.PULSE:
            cfg = pulse_config or PulseConfig()
            if spec.parameter is not None and spec.parameter != cfg.p_min:
                cfg = replace(cfg, p_min=spec.parameter)
            result = pulse_estimate(view, cfg)
            warnings = ()
            if result.fallback_used:
                warnings = (f"TSLS rejected, fell back to {cfg.fallback.label}",)
            return EstimateResult(
                alpha=result.alpha,
                kappa_used=result.kappa_star,
                lambda_used=result.lambda_star,
                diagnostics=Diagnostics(
                    identification=view.identification,
                    condition=dict(view.condition),
                    warnings=warnings,
                ),
                estimator=spec,
                names=view.names,
                pulse=result,
            )
        case _:
            return estimate(view, spec)
