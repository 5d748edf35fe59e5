"""
Configuration validator for blindguide run configurations
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple


@dataclass
class ValidationResult:
    """Result of configuration validation"""
    is_valid: bool
    errors: List[str]
    warnings: Optional[List[str]] = None
    values: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.warnings is None:
            self.warnings = []


@dataclass(frozen=True)
class FieldSpec:
    """Type and range of one configuration key"""
    kind: str                      # int | float | str | choice | float_list
    minimum: Optional[float] = None
    maximum: Optional[float] = None
    exclusive_min: bool = False
    exclusive_max: bool = False
    choices: Tuple[Any, ...] = ()
    length: Optional[int] = None


# Every key a RunConfig accepts; anything else is rejected
SCHEMA: Dict[str, FieldSpec] = {
    "T": FieldSpec("int", minimum=2),
    "beta_start": FieldSpec("float", 0.0, 1.0, exclusive_min=True, exclusive_max=True),
    "beta_end": FieldSpec("float", 0.0, 1.0, exclusive_min=True, exclusive_max=True),
    "std_min": FieldSpec("float", 0.0, exclusive_min=True),
    "std_max": FieldSpec("float", 0.0, exclusive_min=True),
    "std_step": FieldSpec("float", 0.0, exclusive_min=True),
    "tol": FieldSpec("float", 0.0, exclusive_min=True),
    "xi": FieldSpec("float", 0.0),
    "n_guidance": FieldSpec("int", 1, 8),
    "lambda_weights": FieldSpec("float_list", 0.0, exclusive_min=True),
    "std_offsets": FieldSpec("float_list", 0.0),
    "s_base": FieldSpec("float", 0.0),
    "std_lr": FieldSpec("float", 0.0),
    "adjuster": FieldSpec("choice", choices=("constant", "variance", "dgsa")),
    "adjuster_scale": FieldSpec("float", 0.0, 1.0),
    "variance_window": FieldSpec("int", 3),
    "variance_pivot": FieldSpec("float", 0.0, exclusive_min=True),
    "denoiser": FieldSpec("choice", choices=("gmm",)),
    "restorer": FieldSpec("choice", choices=("wiener", "identity")),
    "estimator": FieldSpec("choice", choices=("spectral", "sde")),
    "wiener_noise_power": FieldSpec("float", 0.0),
    "noise_floor": FieldSpec("float", 0.0, exclusive_min=True),
    "compression_step": FieldSpec("float", 0.0),
    "gamma": FieldSpec("float_list", 0.0, length=4),
    "perceptual": FieldSpec("choice", choices=("gms",)),
    "proxy_weight": FieldSpec("float", 0.0),
    "gmm_components": FieldSpec("int", 1),
    "prior_kind": FieldSpec("choice", choices=("fitted", "exemplar")),
    "exemplar_variance": FieldSpec("float", 0.0, exclusive_min=True),
    "stage1_iters": FieldSpec("int", 0),
    "stage2_iters": FieldSpec("int", 0),
    "learning_rate": FieldSpec("float", 0.0, exclusive_min=True),
    "momentum": FieldSpec("float", 0.0, 1.0, exclusive_max=True),
    "batch_size": FieldSpec("int", 1),
    "sde_iters": FieldSpec("int", 0),
    "sde_width": FieldSpec("int", 4),
    "gamma_std": FieldSpec("float", 0.0),
    "seed": FieldSpec("int", 0),
    "image_size": FieldSpec("choice", choices=(16, 32, 64)),
    "channels": FieldSpec("choice", choices=(1, 3)),
    "corpus_size": FieldSpec("int", 1),
    "corpus_grain": FieldSpec("float", 0.0, 0.5),
    "prior_path": FieldSpec("str"),
    "dsst_path": FieldSpec("str"),
    "spectrum_path": FieldSpec("str"),
    "dgsa_path": FieldSpec("str"),
    "sde_path": FieldSpec("str"),
    "trace_path": FieldSpec("str"),
    "workers": FieldSpec("int", 1),
    "log_level": FieldSpec("choice", choices=("DEBUG", "INFO", "WARNING", "ERROR")),
    "log_dir": FieldSpec("str"),
}


class ConfigValidator:
    """Validate and convert a flat configuration mapping"""

    def __init__(self, schema: Optional[Dict[str, FieldSpec]] = None):
        self.schema = schema or SCHEMA

    def validate(self, config: Dict[str, Any]) -> ValidationResult:
        """
        Validate the entire configuration

        Args:
            config: Flat mapping of raw values (strings from .cfg files, native values from YAML)

        Returns:
            ValidationResult with converted values for every valid key
        """
        errors: List[str] = []
        warnings: List[str] = []
        values: Dict[str, Any] = {}

        if not isinstance(config, dict):
            return ValidationResult(False, ["Configuration must be a flat mapping"], warnings)

        for key, raw in config.items():
            spec = self.schema.get(key)
            if spec is None:
                errors.append(f"Unknown configuration key: {key}")
                continue
            try:
                values[key] = self._convert(key, raw, spec)
            except ValueError as e:
                errors.append(str(e))

        errors.extend(self._validate_relations(values))
        warnings.extend(self._collect_warnings(values))

        return ValidationResult(len(errors) == 0, errors, warnings, values)

    def _convert(self, key: str, raw: Any, spec: FieldSpec) -> Any:
        """Convert one raw value and check its range"""
        if spec.kind == "str":
            return "" if raw is None else str(raw)

        if spec.kind == "choice":
            target_type: Callable = type(spec.choices[0])
            try:
                value = target_type(raw.strip() if isinstance(raw, str) else raw)
            except (TypeError, ValueError):
                raise ValueError(f"{key} has invalid value: {raw!r}")
            if isinstance(value, str) and key == "log_level":
                value = value.upper()
            if value not in spec.choices:
                raise ValueError(f"{key} has unsupported value: {raw!r}. Supported: {list(spec.choices)}")
            return value

        if spec.kind == "float_list":
            items = _split_list(raw)
            try:
                value = [float(item) for item in items]
            except (TypeError, ValueError):
                raise ValueError(f"{key} must be a list of numbers, got {raw!r}")
            if spec.length is not None and len(value) != spec.length:
                raise ValueError(f"{key} must have exactly {spec.length} entries, got {len(value)}")
            for item in value:
                self._check_range(key, item, spec)
            return value

        try:
            if spec.kind == "int":
                as_float = float(raw)
                if not as_float.is_integer():
                    raise ValueError
                value = int(as_float)
            else:
                value = float(raw)
        except (TypeError, ValueError):
            raise ValueError(f"{key} must be {'an integer' if spec.kind == 'int' else 'a number'}, got {raw!r}")
        self._check_range(key, value, spec)
        return value

    @staticmethod
    def _check_range(key: str, value: float, spec: FieldSpec):
        """Raise if value lies outside the declared interval"""
        if spec.minimum is not None:
            if value < spec.minimum or (spec.exclusive_min and value == spec.minimum):
                bound = ">" if spec.exclusive_min else ">="
                raise ValueError(f"{key} must be {bound} {spec.minimum}, got {value}")
        if spec.maximum is not None:
            if value > spec.maximum or (spec.exclusive_max and value == spec.maximum):
                bound = "<" if spec.exclusive_max else "<="
                raise ValueError(f"{key} must be {bound} {spec.maximum}, got {value}")

    def _validate_relations(self, values: Dict[str, Any]) -> List[str]:
        """Checks that involve more than one key"""
        errors = []
        if "beta_start" in values and "beta_end" in values and values["beta_start"] > values["beta_end"]:
            errors.append("beta_start must not exceed beta_end")
        if "std_min" in values and "std_max" in values and values["std_min"] >= values["std_max"]:
            errors.append("std_min must be below std_max")
        if "variance_window" in values and values["variance_window"] % 2 == 0:
            errors.append("variance_window must be odd")
        weights = values.get("lambda_weights")
        if weights and any(b > a for a, b in zip(weights, weights[1:])):
            errors.append("lambda_weights must be non-increasing")
        n = values.get("n_guidance")
        if n is not None:
            for key in ("lambda_weights", "std_offsets"):
                if key in values and len(values[key]) < n:
                    errors.append(f"{key} needs at least n_guidance={n} entries")
        return errors

    def _collect_warnings(self, values: Dict[str, Any]) -> List[str]:
        """Legal but suspicious settings"""
        warnings = []
        if values.get("adjuster") == "dgsa" and not values.get("dgsa_path"):
            warnings.append("adjuster is dgsa but no dgsa_path is set")
        if values.get("estimator") == "sde" and not values.get("sde_path"):
            warnings.append("estimator is sde but no sde_path is set")
        return warnings


def _split_list(raw: Any) -> Sequence[Any]:
    """Accept YAML lists and comma separated strings"""
    if isinstance(raw, (list, tuple)):
        return list(raw)
    if isinstance(raw, str):
        return [item.strip() for item in raw.split(",") if item.strip()]
    return [raw]
