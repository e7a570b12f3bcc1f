# src/schemas.py
from __future__ import annotations

import enum
from typing import Annotated, Any, Literal, Optional, Union

from pydantic import AfterValidator, BaseModel, ConfigDict, Field, field_validator, model_validator

from src.constants import MAX_LEVEL_RADIUS, SCHEMA_VERSION
from src.data.presets import get_preset_by_code
from src.services.fields import ProductModel, SpdeModel
from src.services.quadrature import QuadratureSpec

DEFAULT_GRID_COUNT = 5

ModelBlock = Annotated[Union[SpdeModel, ProductModel], Field(discriminator="family")]


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DomainBlock(_Block):
    lower: list[float]
    upper: list[float]

    @model_validator(mode="after")
    def _check_corners(self) -> "DomainBlock":
        if len(self.lower) != len(self.upper):
            raise ValueError("lower и upper разной длины")
        if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError(f"нужно lower < upper покоординатно: {self.lower} vs {self.upper}")
        return self


class GridBlock(_Block):
    """
    rectangle: тензорная сетка counts по осям;
    ball:      Δ-шар радиуса radius вокруг center (по умолчанию центр области), per_axis узлов.
    """
    kind: Literal["rectangle", "ball"] = "rectangle"
    counts: Optional[list[int]] = None
    center: Optional[list[float]] = None
    radius: Optional[float] = Field(default=None, gt=0.0)
    per_axis: int = Field(default=8, ge=2)

    @model_validator(mode="after")
    def _check_kind(self) -> "GridBlock":
        if self.kind == "rectangle" and self.counts is None:
            raise ValueError("для kind=rectangle нужно поле counts")
        if self.kind == "ball" and self.radius is None:
            raise ValueError("для kind=ball нужно поле radius")
        return self


class SamplerBlock(_Block):
    n_paths: int = Field(default=2000, ge=1)
    master_seed: int = Field(default=0, ge=0, le=2 ** 64 - 1)
    write_csv: bool = True
    write_binary: bool = False


def _check_radii(values: list[float]) -> list[float]:
    if any(not (0.0 < r < MAX_LEVEL_RADIUS) for r in values):
        raise ValueError(f"уровни должны лежать в (0, {MAX_LEVEL_RADIUS})")
    if any(b >= a for a, b in zip(values, values[1:])):
        raise ValueError("уровни должны строго убывать")
    return values


Radii = Annotated[list[float], AfterValidator(_check_radii)]


class SmallBallBlock(_Block):
    """Уровни (r, u = r/ratio) для всех r из radii и ratio из ratios."""
    radii: Radii = Field(default_factory=lambda: [0.08, 0.06, 0.04])
    ratios: list[float] = Field(default_factory=lambda: [1.2, 1.6, 2.0, 2.5, 3.0])
    per_axis: int = Field(default=14, ge=2)

    @field_validator("ratios")
    @classmethod
    def _ratios_above_one(cls, values: list[float]) -> list[float]:
        if any(r <= 1.0 for r in values):
            raise ValueError("отношения r/u должны быть > 1")
        return values


class ModulusBlock(_Block):
    levels: Radii = Field(default_factory=lambda: [0.08, 0.04, 0.02, 0.01])
    metric: Literal["d", "delta"] = "delta"
    max_pairs: int = Field(default=1_000_000, ge=1)


class LilBlock(_Block):
    time_scales: list[float] = Field(default_factory=lambda: [1e-1, 1e-2, 1e-3])
    space_scales: list[float] = Field(default_factory=lambda: [1e-1, 1e-2, 1e-3])
    dual: bool = True


class EstimatorBlock(_Block):
    small_ball: SmallBallBlock = Field(default_factory=SmallBallBlock)
    modulus: ModulusBlock = Field(default_factory=ModulusBlock)
    chung_radii: Radii = Field(default_factory=lambda: [0.08, 0.04, 0.02, 0.01])
    lil: LilBlock = Field(default_factory=LilBlock)


class ChecksBlock(_Block):
    """Какие проверки выполнять и с какими порогами."""
    plancherel_pairs: int = Field(default=0, ge=0)
    plancherel_tolerance: float = 0.005
    band_breaks: list[float] = Field(default_factory=list)
    # хвост [b, ∞): V(b)·b² не выше замороженной базы (если задана)
    tail_band_b_values: list[float] = Field(default_factory=list)
    tail_band_baseline: Optional[float] = Field(default=None, gt=0.0)
    low_band_a_values: list[float] = Field(default_factory=list)
    low_band_slack: float = Field(default=0.3, ge=0.0)
    band_separation: float = Field(default=0.05, gt=0.0)
    metric_scan_levels: list[int] = Field(default_factory=list)
    metric_scan_pairs: int = Field(default=50, ge=1)
    metric_spread_limit: float = 20.0
    lnd_scales: list[float] = Field(default_factory=list)
    lnd_factor_limit: float = 3.0
    frobenius_tolerance: float = 0.03
    small_ball_q_band: tuple[float, float] = (0.8, 1.2)
    local_reference_factor: float = 1.4
    uniform_reference_widen: float = 1.5
    lil_dual_tolerance: float = 0.005
    lil_ratio_tolerance: float = 0.02


class RunConfig(_Block):
    schema_version: Literal[1] = SCHEMA_VERSION
    model: ModelBlock
    domain: DomainBlock
    grid: Optional[GridBlock] = None
    quadrature: QuadratureSpec = Field(default_factory=QuadratureSpec)
    sampler: SamplerBlock = Field(default_factory=SamplerBlock)
    estimators: EstimatorBlock = Field(default_factory=EstimatorBlock)
    checks: ChecksBlock = Field(default_factory=ChecksBlock)
    output_dir: Optional[str] = None

    @model_validator(mode="before")
    @classmethod
    def _expand_preset(cls, data: Any) -> Any:
        """model.preset подставляет параметры и область эталонной модели."""
        if not isinstance(data, dict):
            return data
        block = data.get("model")
        if isinstance(block, dict) and "preset" in block:
            code = block["preset"]
            preset = get_preset_by_code(code)
            if preset is None:
                raise ValueError(f"неизвестный пресет модели: {code!r}")
            data = dict(data)
            data["model"] = preset.model.model_dump(mode="json")
            data.setdefault("domain", {"lower": list(preset.lower), "upper": list(preset.upper)})
        return data

    @model_validator(mode="after")
    def _check_consistency(self) -> "RunConfig":
        n = self.model.n_coords
        if self.grid is None:
            self.grid = GridBlock(counts=[DEFAULT_GRID_COUNT] * n)
        if len(self.domain.lower) != n:
            raise ValueError(f"domain задаёт {len(self.domain.lower)} координат, модель ожидает {n}")
        if self.grid.kind == "rectangle" and len(self.grid.counts) != n:
            raise ValueError(f"grid.counts задаёт {len(self.grid.counts)} осей, нужно {n}")
        if self.grid.center is not None:
            if len(self.grid.center) != n:
                raise ValueError(f"grid.center задаёт {len(self.grid.center)} координат, нужно {n}")
            if not all(lo <= c <= hi for lo, c, hi in zip(self.domain.lower, self.grid.center, self.domain.upper)):
                raise ValueError("grid.center вне области")
        return self


class AcceptanceCriterion(str, enum.Enum):
    exponent_arithmetic = "exponent_arithmetic"
    plancherel_oracle = "plancherel_oracle"
    band_structure = "band_structure"
    metric_equivalence = "metric_equivalence"
    strong_lnd = "strong_lnd"
    small_ball_exponent = "small_ball_exponent"
    lil_constants = "lil_constants"
    modulus_statistics = "modulus_statistics"
    sampler_fidelity = "sampler_fidelity"
    product_identities = "product_identities"
    gram_psd = "gram_psd"


class Verdict(BaseModel):
    criterion: AcceptanceCriterion
    name: str
    passed: bool
    measured: Optional[float] = None
    threshold: Optional[str] = None
    detail: str = ""


class StageTiming(BaseModel):
    stage: str
    seconds: float


class RunReport(BaseModel):
    """
    Отчёт запуска. Время и прочие недетерминированные поля лежат только в metadata.
    """
    schema_version: Literal[1] = SCHEMA_VERSION
    software_version: str
    subcommand: str
    config: dict[str, Any]
    config_hash: str
    results: dict[str, Any] = Field(default_factory=dict)
    measured_constants: dict[str, float] = Field(default_factory=dict)
    verdicts: list[Verdict] = Field(default_factory=list)
    metadata: dict[str, Any] = Field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def deterministic_view(self) -> dict[str, Any]:
        return self.model_dump(mode="json", exclude={"metadata"})
