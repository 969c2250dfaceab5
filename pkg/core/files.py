"""
core/files.py - File schemas and readers/writers
pydantic models for dataset, noise, system, gain and simulation-spec files;
JSON with a fixed key order, CSV trajectories through pandas.
"""
from __future__ import annotations

import json
import logging
import math
from pathlib import Path
from typing import Annotated, Any, List, Literal, Optional, Type, TypeVar, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, model_validator

from core.data_model import NoiseModel, SystemModel, TrajectoryData, noise_norm_bound
from core.exceptions import DimensionError, FileFormatError, FragilityToolkitError

logger = logging.getLogger(__name__)

Matrix = List[List[float]]
SchemaT = TypeVar("SchemaT", bound=BaseModel)


class _Schema(BaseModel):
    model_config = ConfigDict(extra="forbid")


def _rows_have(rows: Matrix, count: int, width: int, name: str) -> None:
    if len(rows) != count:
        raise ValueError(f"{name} must have {count} rows, got {len(rows)}")
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(f"{name}[{i}] must have {width} entries, got {len(row)}")


# ---------------------------------------------------------------------------
# Dataset / system / gain
# ---------------------------------------------------------------------------

class DatasetFile(_Schema):
    n: int = Field(ge=1)
    m: int = Field(ge=1)
    T: int = Field(ge=1)
    u: Matrix                      # T rows of m inputs
    x: Matrix                      # T+1 rows of n states
    w: Optional[Matrix] = None     # T rows of n disturbances (synthetic data only)

    @model_validator(mode="after")
    def _check_shapes(self) -> "DatasetFile":
        _rows_have(self.u, self.T, self.m, "u")
        _rows_have(self.x, self.T + 1, self.n, "x")
        if self.w is not None:
            _rows_have(self.w, self.T, self.n, "w")
        return self

    def to_trajectory(self) -> TrajectoryData:
        w = None if self.w is None else np.array(self.w, dtype=float)
        return TrajectoryData(u=np.array(self.u, dtype=float), x=np.array(self.x, dtype=float), w=w)

    @classmethod
    def from_trajectory(cls, data: TrajectoryData) -> "DatasetFile":
        return cls(
            n=data.n, m=data.m, T=data.T,
            u=data.u.tolist(), x=data.x.tolist(),
            w=None if data.w is None else data.w.tolist(),
        )


class SystemFile(_Schema):
    A: Matrix
    B: Matrix

    def to_system(self) -> SystemModel:
        return SystemModel(np.array(self.A, dtype=float), np.array(self.B, dtype=float))

    @classmethod
    def from_system(cls, sys: SystemModel) -> "SystemFile":
        return cls(A=sys.A.tolist(), B=sys.B.tolist())


class GainFile(BaseModel):
    """Gain K; extra keys are ignored so fragility reports can be read as gain files."""
    model_config = ConfigDict(extra="ignore", populate_by_name=True)

    K: Matrix
    kind: Optional[str] = None         # report kind, e.g. "DataGivenK"
    lam: Optional[float] = Field(None, alias="lambda")
    Delta: Optional[Matrix] = None     # perturbation to replay in `verify`

    def gain(self) -> np.ndarray:
        return np.array(self.K, dtype=float)

    def delta(self) -> Optional[np.ndarray]:
        return None if self.Delta is None else np.array(self.Delta, dtype=float)


# ---------------------------------------------------------------------------
# Noise
# ---------------------------------------------------------------------------

class NormBoundNoise(_Schema):
    kind: Literal["norm_bound"]
    eps: float = Field(gt=0)


class GeneralNoise(_Schema):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    kind: Literal["general"]
    phi11: Matrix = Field(alias="Phi11")
    phi12: Matrix = Field(alias="Phi12")
    phi22: Matrix = Field(alias="Phi22")



class NoiseFree(_Schema):
    kind: Literal["noise_free"]


NoiseSpec = Annotated[Union[NormBoundNoise, GeneralNoise, NoiseFree], Field(discriminator="kind")]


def noise_model_from(spec: Union[NormBoundNoise, GeneralNoise, NoiseFree], n: int, T: int) -> NoiseModel:
    """Build and validate the noise model for a dataset of size (n, T)."""
    if isinstance(spec, NormBoundNoise):
        return noise_norm_bound(n, T, spec.eps)
    if isinstance(spec, NoiseFree):
        return NoiseModel.noise_free(n, T)
    model = NoiseModel(np.array(spec.phi11, dtype=float), np.array(spec.phi12, dtype=float),
                       np.array(spec.phi22, dtype=float))
    if model.n != n or model.T != T:
        raise DimensionError(f"noise file is sized (n={model.n}, T={model.T}), data is (n={n}, T={T})")
    return model.validate()


# ---------------------------------------------------------------------------
# Simulation spec
# ---------------------------------------------------------------------------

class ExplicitInput(_Schema):
    kind: Literal["explicit"]
    u: Matrix


class GaussianInput(_Schema):
    kind: Literal["gaussian"]
    std: float = Field(1.0, gt=0)


class ExplicitDisturbance(_Schema):
    kind: Literal["explicit"]
    w: Matrix


class UniformDisturbance(_Schema):
    kind: Literal["uniform"]
    bound: float = Field(gt=0)     # entries drawn from [-bound, bound]


class GaussianDisturbance(_Schema):
    kind: Literal["gaussian"]
    std: float = Field(gt=0)


class ZeroDisturbance(_Schema):
    kind: Literal["zero"] = "zero"


InputSpec = Annotated[Union[ExplicitInput, GaussianInput], Field(discriminator="kind")]
DisturbanceSpec = Annotated[
    Union[ExplicitDisturbance, UniformDisturbance, GaussianDisturbance, ZeroDisturbance],
    Field(discriminator="kind"),
]


class SimulationSpec(_Schema):
    T: int = Field(ge=1)
    x0: List[float]
    input: InputSpec
    disturbance: DisturbanceSpec = ZeroDisturbance()


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def _jsonable(obj: Any) -> Any:
    """numpy scalars/arrays to plain Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(payload: Any) -> str:
    """Pretty JSON preserving the insertion order of keys."""
    return json.dumps(_jsonable(payload), indent=2, allow_nan=False) + "\n"


def save_json(path: Union[str, Path], payload: Any) -> Path:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(payload), encoding="utf-8")
    logger.info(f"wrote {path}")
    return path


def _read(path: Union[str, Path]) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FileFormatError(f"cannot read {path}: {exc}") from exc


def load_model(path: Union[str, Path], schema: Type[SchemaT]) -> SchemaT:
    try:
        return schema.model_validate_json(_read(path))
    except ValidationError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc


def load_noise_spec(path: Union[str, Path]):
    try:
        return TypeAdapter(NoiseSpec).validate_json(_read(path))
    except ValidationError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc


def load_dataset(path: Union[str, Path]) -> TrajectoryData:
    """Dataset from JSON, or from CSV when the suffix is .csv."""
    if str(path).lower().endswith(".csv"):
        return load_trajectory_csv(path)
    try:
        return load_model(path, DatasetFile).to_trajectory()
    except FragilityToolkitError:
        raise
    except ValueError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc


def save_dataset(path: Union[str, Path], data: TrajectoryData) -> Path:
    if str(path).lower().endswith(".csv"):
        return save_trajectory_csv(path, data)
    return save_json(path, DatasetFile.from_trajectory(data).model_dump(exclude_none=True))


# ---------------------------------------------------------------------------
# CSV trajectories
# ---------------------------------------------------------------------------

def _columns(prefix: str, count: int) -> List[str]:
    return [f"{prefix}{i + 1}" for i in range(count)]


def load_trajectory_csv(path: Union[str, Path]) -> TrajectoryData:
    """CSV with header t,u1..um,x1..xn; the row t = T carries states only."""
    try:
        df = pd.read_csv(path)
    except (OSError, pd.errors.ParserError) as exc:
        raise FileFormatError(f"cannot read {path}: {exc}") from exc
    u_cols = [c for c in df.columns if c.startswith("u")]
    x_cols = [c for c in df.columns if c.startswith("x")]
    if "t" not in df.columns or not u_cols or not x_cols:
        raise FileFormatError(f"{path}: header must be t,u1..um,x1..xn")
    if u_cols != _columns("u", len(u_cols)) or x_cols != _columns("x", len(x_cols)):
        raise FileFormatError(f"{path}: columns must be numbered u1..um and x1..xn")
    df = df.sort_values("t").reset_index(drop=True)
    x = df[x_cols].to_numpy(dtype=float)
    u = df[u_cols].to_numpy(dtype=float)[:-1]
    if np.isnan(x).any() or np.isnan(u).any():
        raise FileFormatError(f"{path}: missing values (only the last row may omit inputs)")
    return TrajectoryData(u=u, x=x)


def save_trajectory_csv(path: Union[str, Path], data: TrajectoryData) -> Path:
    path = Path(path)
    frame = pd.DataFrame({"t": np.arange(data.T + 1)})
    u = np.vstack([data.u, np.full((1, data.m), np.nan)])
    for i, name in enumerate(_columns("u", data.m)):
        frame[name] = u[:, i]
    for i, name in enumerate(_columns("x", data.n)):
        frame[name] = data.x[:, i]
    frame.to_csv(path, index=False, float_format="%.17g")
    logger.info(f"wrote {path}")
    return path
