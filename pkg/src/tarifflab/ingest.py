"""Data ingestion and demand-model calibration.

Hourly load and day-ahead price CSVs (`day,hour,value`) become per-day
scenarios; the demand matrix is a geometric-decay Toeplitz kernel scaled so
the model reproduces a target aggregate own-price elasticity at the utility's
flat rate. The calibrated model round-trips: demand at the flat rate equals
the observed consumption scenario by scenario.
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    AlignmentMismatch,
    MalformedRow,
    MissingHour,
    ModelFileError,
    NonFiniteValue,
    NonPositiveLoad,
    ScaleNonPositive,
    SingleScenario,
)
from .model import (
    LinearDemandModel,
    ScenarioSet,
    Tariff,
    flat_rate_elasticity,
    phi_bar,
)

SERIES_KINDS = ("load", "price")
MODEL_FORMAT = "tarifflab-model/1"


@dataclass(frozen=True)
class CalibrationConfig:
    """Calibration inputs: the utility's flat tariff and the target elasticity.

    `flat_rate` is pi_CE in $/kWh, `connection_charge` is A_CE in
    $/customer/day, `elasticity_target` the aggregate own-price elasticity at
    the flat rate (negative for downward-sloping demand), `alpha` the
    geometric decay of the inter-temporal substitution kernel.
    """

    flat_rate: float = 0.172
    elasticity_target: float = -0.3
    alpha: float = 0.2
    customers: int = 2_200_000
    connection_charge: float = 0.52

    def __post_init__(self):
        if not self.flat_rate > 0:
            raise ValueError("flat rate must be positive")
        # alpha = 0 is the identity-kernel limit (no substitution)
        if not 0 <= self.alpha < 1:
            raise ValueError("kernel decay must lie in [0, 1)")
        if self.customers < 1:
            raise ValueError("need at least one customer")


@dataclass(frozen=True)
class RawSeries:
    """A dense (days x hours) block parsed from one CSV."""

    kind: str
    values: np.ndarray
    day_labels: tuple[int, ...]

    @property
    def days(self) -> int:
        return self.values.shape[0]

    @property
    def periods(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class RevenueBaseline:
    """Gross revenue and net (surplus) revenue of the flat baseline, $/cycle."""

    gross: float
    net: float


def parse_csv(path, kind: str) -> RawSeries:
    """Parse an hourly series CSV with header `day,hour,value`.

    Days are re-indexed densely from 0 (sorted by their original labels);
    every day must carry exactly the hours 0..N-1 where N is the largest
    hour seen. Errors carry the 1-based line number.
    """
    if kind not in SERIES_KINDS:
        raise ValueError(f"kind must be one of {SERIES_KINDS}, got {kind!r}")
    path = Path(path)
    cells: dict[tuple[int, int], float] = {}
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRow(1, "empty file, expected header day,hour,value") from None
        if [h.strip() for h in header] != ["day", "hour", "value"]:
            raise MalformedRow(1, f"expected header day,hour,value, got {header!r}")
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise MalformedRow(line, f"expected 3 fields, got {len(row)}")
            try:
                day = int(row[0])
                hour = int(row[1])
            except ValueError:
                raise MalformedRow(line, f"day/hour must be integers: {row!r}") from None
            try:
                value = float(row[2])
            except ValueError:
                raise MalformedRow(line, f"value is not a number: {row[2]!r}") from None
            if not math.isfinite(value):
                raise NonFiniteValue(line)
            if hour < 0:
                raise MalformedRow(line, f"hour must be nonnegative, got {hour}")
            if kind == "load" and value < 0:
                raise MalformedRow(line, f"load must be nonnegative, got {value!r}")
            if (day, hour) in cells:
                raise MalformedRow(line, f"duplicate day {day} hour {hour}")
            cells[(day, hour)] = value
    if not cells:
        raise MalformedRow(2, "no data rows")

    periods = max(h for _, h in cells) + 1
    labels = sorted({d for d, _ in cells})
    values = np.empty((len(labels), periods))
    for i, day in enumerate(labels):
        for hour in range(periods):
            if (day, hour) not in cells:
                raise MissingHour(day, hour)
            values[i, hour] = cells[(day, hour)]
    return RawSeries(kind=kind, values=values, day_labels=tuple(labels))


def estimate_moments(load: RawSeries, prices: RawSeries) -> ScenarioSet:
    """Pair aligned days into equiprobable (price, consumption) scenarios.

    The returned set's internal moments are population (1/J) moments; the
    unbiased 1/(J-1) estimate is available from
    `ScenarioSet.sample_cross_covariance`. At least two days are required,
    otherwise the covariance has no sample estimate at all.
    """
    if load.days != prices.days or load.periods != prices.periods:
        raise AlignmentMismatch(
            f"load is {load.days}x{load.periods}, prices are "
            f"{prices.days}x{prices.periods}"
        )
    if load.day_labels != prices.day_labels:
        raise AlignmentMismatch("load and price files cover different days")
    if load.days < 2:
        raise SingleScenario("need at least two days to estimate moments")
    return ScenarioSet(lams=prices.values, omegas=load.values)


def toeplitz_kernel(periods: int, alpha: float) -> np.ndarray:
    """Geometric-decay kernel K[k, t] = alpha^|k - t| (positive definite)."""
    idx = np.arange(periods)
    return np.power(float(alpha), np.abs(idx[:, None] - idx[None, :]))


def calibrate_demand(
    consumption: ScenarioSet, config: CalibrationConfig
) -> LinearDemandModel:
    """Fit the demand matrix and recover demand states from flat-rate data.

    The kernel fixes the shape of the price response; its scale c comes from
    matching the aggregate own-price elasticity at the flat rate:
    c = -eps_target * total_load / (rate * 1'K 1). Demand states are then
    Omega_j = x_j + G 1 rate, so the model reproduces each observed day
    exactly at the flat rate.
    """
    if config.elasticity_target >= 0:
        raise ScaleNonPositive(
            f"elasticity target must be negative, got {config.elasticity_target!r}"
        )
    xhat = consumption.omega_bar
    total = float(xhat.sum())
    if total <= 0:
        raise NonPositiveLoad(f"mean total consumption is {total!r}")
    n = consumption.periods
    kernel = toeplitz_kernel(n, config.alpha)
    ones = np.ones(n)
    scale = -config.elasticity_target * total / (
        config.flat_rate * float(ones @ kernel @ ones)
    )
    G = scale * kernel
    # same expression the demand path evaluates, so the round trip
    # D(1 * rate, Omega_j) = x_j holds to one rounding of the addition
    omegas = consumption.omegas + G @ np.full(n, config.flat_rate)
    model = LinearDemandModel(
        G=G,
        scenarios=ScenarioSet(lams=consumption.lams, omegas=omegas),
        customers=config.customers,
    )
    realized = flat_rate_elasticity(model, config.flat_rate)
    if abs(realized - config.elasticity_target) > 1e-9:
        raise AssertionError(
            f"calibration round-trip failed: realized elasticity {realized!r}"
        )
    return model


def baseline_tariff(model: LinearDemandModel, config: CalibrationConfig) -> Tariff:
    """The utility's incumbent flat two-part tariff T_CE."""
    return Tariff(
        connection_charge=config.connection_charge,
        prices=np.full(model.periods, config.flat_rate),
        family="adjusted-flat",
    )


def revenue_baseline(
    model: LinearDemandModel, config: CalibrationConfig
) -> RevenueBaseline:
    """Gross and net revenue of the flat baseline on the calibrated model.

    Gross is billed volume plus connection charges; net subtracts the
    wholesale procurement cost (it is the expected retailer surplus and the
    natural revenue target F for tariff comparisons).
    """
    flat = np.full(model.periods, config.flat_rate)
    dbar = model.mean_demand(flat)
    fixed = model.customers * config.connection_charge
    gross = float(dbar.sum()) * config.flat_rate + fixed
    net = phi_bar(model, flat) + fixed
    return RevenueBaseline(gross=gross, net=net)


# --- model file -------------------------------------------------------------
#
# Line-oriented `key = values` text, floats written with repr() so they
# round-trip bit-exactly. Everything above the provenance block is the
# payload; reruns on identical inputs produce byte-identical payloads.
# Schema (order fixed by the writer):
#
#   format = tarifflab-model/1
#   periods = <int>
#   customers = <int>
#   g = <N*N floats, row-major>
#   lambda_bar = <N floats>
#   omega_bar = <N floats>
#   sigma_lambda_omega = <N*N floats, row-major, 1/J population convention>
#   sigma_convention = population-ddof0
#   scenario_count = <int J>
#   scenario.<j>.lambda = <N floats>
#   scenario.<j>.omega = <N floats>
#   baseline.flat_rate = <float>            (optional)
#   baseline.connection_charge = <float>    (optional)
#   provenance.<key> = <string>             (optional block, created last)


@dataclass(frozen=True)
class ModelFilePayload:
    """Raw model-file contents; semantic validation happens in `to_model`."""

    periods: int
    customers: int
    G: np.ndarray
    lams: np.ndarray
    omegas: np.ndarray
    baseline_flat_rate: float | None = None
    baseline_connection_charge: float | None = None
    provenance: dict[str, str] = field(default_factory=dict)

    def to_model(self) -> LinearDemandModel:
        return LinearDemandModel(
            G=self.G,
            scenarios=ScenarioSet(lams=self.lams, omegas=self.omegas),
            customers=self.customers,
        )

    def baseline_tariff(self) -> Tariff | None:
        if self.baseline_flat_rate is None or self.baseline_connection_charge is None:
            return None
        return Tariff(
            connection_charge=self.baseline_connection_charge,
            prices=np.full(self.periods, self.baseline_flat_rate),
            family="adjusted-flat",
        )


def _fmt_vector(v: np.ndarray) -> str:
    return " ".join(repr(float(x)) for x in np.asarray(v).ravel())


def write_model_file(
    path,
    model: LinearDemandModel,
    *,
    baseline: CalibrationConfig | None = None,
    provenance: dict[str, str] | None = None,
) -> None:
    ss = model.scenarios
    lines = [
        f"format = {MODEL_FORMAT}",
        f"periods = {model.periods}",
        f"customers = {model.customers}",
        f"g = {_fmt_vector(model.G)}",
        f"lambda_bar = {_fmt_vector(ss.lambda_bar)}",
        f"omega_bar = {_fmt_vector(ss.omega_bar)}",
        f"sigma_lambda_omega = {_fmt_vector(ss.sigma_lambda_omega)}",
        "sigma_convention = population-ddof0",
        f"scenario_count = {ss.n_scenarios}",
    ]
    for j in range(ss.n_scenarios):
        lines.append(f"scenario.{j}.lambda = {_fmt_vector(ss.lams[j])}")
        lines.append(f"scenario.{j}.omega = {_fmt_vector(ss.omegas[j])}")
    if baseline is not None:
        lines.append(f"baseline.flat_rate = {baseline.flat_rate!r}")
        lines.append(f"baseline.connection_charge = {baseline.connection_charge!r}")
    for key, value in (provenance or {}).items():
        if "\n" in str(value):
            raise ValueError("provenance values must be single-line")
        lines.append(f"provenance.{key} = {value}")
    Path(path).write_text("\n".join(lines) + "\n")


def model_payload_text(path) -> str:
    """The payload portion of a model file (everything above provenance)."""
    keep = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("provenance."):
            break
        keep.append(line)
    return "\n".join(keep) + "\n"


def _parse_floats(path, line_no: int, text: str, expect: int, what: str) -> np.ndarray:
    parts = text.split()
    if len(parts) != expect:
        raise ModelFileError(
            path, line_no, f"{what}: expected {expect} values, got {len(parts)}"
        )
    try:
        out = np.array([float(p) for p in parts])
    except ValueError:
        raise ModelFileError(path, line_no, f"{what}: non-numeric value") from None
    if not np.isfinite(out).all():
        raise ModelFileError(path, line_no, f"{what}: non-finite value")
    return out


def read_model_file(path) -> ModelFilePayload:
    """Parse a model file into its raw payload.

    Structural problems (missing keys, wrong counts, non-finite numbers,
    inconsistent stored moments) raise ModelFileError with file/line context.
    Semantic conditions on G (symmetry, positive definiteness) are *not*
    enforced here; `to_model` applies them, and the check command reports
    them as named diagnostics.
    """
    path = Path(path)
    entries: dict[str, tuple[int, str]] = {}
    provenance: dict[str, str] = {}
    for line_no, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition(" = ")
        if not sep:
            raise ModelFileError(path, line_no, f"expected 'key = value', got {raw!r}")
        key = key.strip()
        if key.startswith("provenance."):
            provenance[key[len("provenance."):]] = value
            continue
        if key in entries:
            raise ModelFileError(path, line_no, f"duplicate key {key!r}")
        entries[key] = (line_no, value.strip())

    def need(key: str) -> tuple[int, str]:
        if key not in entries:
            raise ModelFileError(path, None, f"missing key {key!r}")
        return entries[key]

    line_no, fmt = need("format")
    if fmt != MODEL_FORMAT:
        raise ModelFileError(path, line_no, f"unsupported format {fmt!r}")

    def need_int(key: str) -> int:
        line_no, text = need(key)
        try:
            return int(text)
        except ValueError:
            raise ModelFileError(path, line_no, f"{key} must be an integer") from None

    periods = need_int("periods")
    customers = need_int("customers")
    if periods < 1:
        raise ModelFileError(path, entries["periods"][0], "periods must be >= 1")
    count = need_int("scenario_count")
    if count < 1:
        raise ModelFileError(path, entries["scenario_count"][0], "need scenarios")

    line_no, text = need("g")
    G = _parse_floats(path, line_no, text, periods * periods, "g").reshape(
        periods, periods
    )
    lams = np.empty((count, periods))
    omegas = np.empty((count, periods))
    for j in range(count):
        line_no, text = need(f"scenario.{j}.lambda")
        lams[j] = _parse_floats(path, line_no, text, periods, f"scenario.{j}.lambda")
        line_no, text = need(f"scenario.{j}.omega")
        omegas[j] = _parse_floats(path, line_no, text, periods, f"scenario.{j}.omega")

    # stored moments are derived; verify them against the scenarios so silent
    # file edits are caught at load time
    for key, expect_vals, expect_n in (
        ("lambda_bar", lams.mean(axis=0), periods),
        ("omega_bar", omegas.mean(axis=0), periods),
    ):
        line_no, text = need(key)
        stored = _parse_floats(path, line_no, text, expect_n, key)
        scale = max(1.0, float(np.abs(expect_vals).max()))
        if float(np.abs(stored - expect_vals).max()) > 1e-9 * scale:
            raise ModelFileError(path, line_no, f"{key} disagrees with scenarios")
    line_no, text = need("sigma_lambda_omega")
    stored_sigma = _parse_floats(
        path, line_no, text, periods * periods, "sigma_lambda_omega"
    ).reshape(periods, periods)
    dl = lams - lams.mean(axis=0)
    do = omegas - omegas.mean(axis=0)
    sigma = dl.T @ do / count
    scale = max(1.0, float(np.abs(sigma).max()))
    if float(np.abs(stored_sigma - sigma).max()) > 1e-9 * scale:
        raise ModelFileError(path, line_no, "sigma_lambda_omega disagrees with scenarios")

    flat_rate = None
    charge = None
    if "baseline.flat_rate" in entries:
        line_no, text = entries["baseline.flat_rate"]
        flat_rate = float(_parse_floats(path, line_no, text, 1, "baseline.flat_rate")[0])
    if "baseline.connection_charge" in entries:
        line_no, text = entries["baseline.connection_charge"]
        charge = float(
            _parse_floats(path, line_no, text, 1, "baseline.connection_charge")[0]
        )

    return ModelFilePayload(
        periods=periods,
        customers=customers,
        G=G,
        lams=lams,
        omegas=omegas,
        baseline_flat_rate=flat_rate,
        baseline_connection_charge=charge,
        provenance=provenance,
    )


def file_digest(path) -> str:
    return "sha256:" + hashlib.sha256(Path(path).read_bytes()).hexdigest()


def fit_provenance(
    load_path, prices_path, config: CalibrationConfig, created: str
) -> dict[str, str]:
    return {
        "command": "fit",
        "tool_version": __version__,
        "load_digest": file_digest(load_path),
        "prices_digest": file_digest(prices_path),
        "flat_rate": repr(config.flat_rate),
        "elasticity_target": repr(config.elasticity_target),
        "alpha": repr(config.alpha),
        "customers": str(config.customers),
        "connection_charge": repr(config.connection_charge),
        "sigma_note": "stored sigma is population (1/J); estimation reports 1/(J-1)",
        "created": created,
    }
