"""
Typed run configuration
"""

from dataclasses import dataclass, field, fields, asdict
from typing import Any, Dict, List, Optional, Tuple

from ..exceptions import ConfigurationError
from .parser import ConfigParser
from .validator import ConfigValidator, ValidationResult

# Guidance weights per guidance count, from the guidance-count ablation
LAMBDA_PRESETS: Dict[int, Tuple[float, ...]] = {
    1: (1.0,),
    2: (0.8, 0.2),
    3: (0.7, 0.2, 0.1),
    4: (0.7, 0.1, 0.1, 0.1),
}


@dataclass(frozen=True)
class RunConfig:
    """
    Every tunable of a run; defaults are the documented desk-scale choices

    std_lr multiplies the kernel-std refinement step std - std_lr * sqrt(ab_t) * w * dL/dstd.
    The literal update is std_lr = 1; on model-domain images the step then
    overshoots once 2 * ||dk/dstd * x0||^2 exceeds 2 / sqrt(ab_t), which the toy faces
    reach late in the chain. The default 0.02 keeps every step contracting and
    still settles within a few hundred steps.

    prior_kind "exemplar" places one component of variance exemplar_variance on
    every corpus image; "fitted" fits gmm_components spherical components.
    """

    # diffusion schedule
    T: int = 1000
    beta_start: float = 1e-4
    beta_end: float = 0.02
    # std grid
    std_min: float = 0.1
    std_max: float = 15.0
    std_step: float = 0.1
    # starting-step table and std* search
    tol: float = 1e-3
    xi: float = 0.01
    # guidance
    n_guidance: int = 3
    lambda_weights: List[float] = field(default_factory=lambda: [0.7, 0.2, 0.1, 0.05])
    std_offsets: List[float] = field(default_factory=lambda: [0.0, 1.0, 2.0, 3.0])
    s_base: float = 1.0
    std_lr: float = 0.02
    # scale adjuster
    adjuster: str = "constant"
    adjuster_scale: float = 1.0
    variance_window: int = 5
    variance_pivot: float = 0.01
    # components
    denoiser: str = "gmm"
    restorer: str = "wiener"
    estimator: str = "spectral"
    wiener_noise_power: float = 1e-3
    noise_floor: float = 1e-3
    compression_step: float = 0.002
    # adjuster training
    gamma: List[float] = field(default_factory=lambda: [0.0, 0.01, 0.01, 0.05])
    perceptual: str = "gms"
    proxy_weight: float = 1.0
    gmm_components: int = 8
    prior_kind: str = "fitted"
    exemplar_variance: float = 1e-3
    stage1_iters: int = 2000
    stage2_iters: int = 700
    learning_rate: float = 1e-3
    momentum: float = 0.9
    batch_size: int = 8
    sde_iters: int = 1500
    sde_width: int = 16
    gamma_std: float = 1.0
    # data and runtime
    seed: int = 0
    image_size: int = 32
    channels: int = 1
    corpus_size: int = 256
    corpus_grain: float = 0.0
    prior_path: str = ""
    dsst_path: str = ""
    spectrum_path: str = ""
    dgsa_path: str = ""
    sde_path: str = ""
    trace_path: str = ""
    workers: int = 1
    log_level: str = "INFO"
    log_dir: str = "logs"

    def __post_init__(self):
        problems = []
        if len(self.lambda_weights) < self.n_guidance:
            problems.append(f"lambda_weights needs at least n_guidance={self.n_guidance} entries")
        if len(self.std_offsets) < self.n_guidance:
            problems.append(f"std_offsets needs at least n_guidance={self.n_guidance} entries")
        if problems:
            raise ConfigurationError("Invalid run configuration", problems)

    @property
    def guidance_weights(self) -> List[float]:
        """The λ weights actually used for n_guidance items"""
        return list(self.lambda_weights[: self.n_guidance])

    @property
    def guidance_offsets(self) -> List[float]:
        return list(self.std_offsets[: self.n_guidance])

    @classmethod
    def from_mapping(cls, mapping: Dict[str, Any]) -> "RunConfig":
        """Validate a flat mapping and build a RunConfig"""
        result = ConfigValidator().validate(mapping)
        if not result.is_valid:
            raise ConfigurationError("Configuration validation failed", result.errors)
        return cls(**result.values)

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        """Parse, validate and build"""
        try:
            mapping = ConfigParser().parse(path)
        except (OSError, ValueError) as e:
            raise ConfigurationError(f"Cannot read configuration {path}", [str(e)])
        return cls.from_mapping(mapping)

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Copy with some keys replaced (validated like a file)"""
        merged = {**self.to_dict(), **{k: v for k, v in overrides.items() if v is not None}}
        return RunConfig.from_mapping(merged)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def to_flat_text(self) -> str:
        """Serialise back to the flat `key = value` format"""
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, list):
                value = ", ".join(repr(float(v)) for v in value)
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"


def validate_mapping(mapping: Dict[str, Any]) -> ValidationResult:
    """Validation without construction, for dry runs"""
    return ConfigValidator().validate(mapping)


def load_config(path: Optional[str]) -> RunConfig:
    """RunConfig from a file, or defaults when no file is given"""
    if not path:
        return RunConfig()
    return RunConfig.from_file(path)
