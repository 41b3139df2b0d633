"""Ground truth, simulated scans and the two reference scenarios.

Truth tracks move on noiseless constant-velocity lines; only the filters
assume process noise. Scans are drawn per sensor from independent PCG64
streams seeded with ``SeedSequence([seed, sensor])``, so adding a sensor never
changes the scans of another one.

Scenario files are JSON objects::

    {
      "name": "scenario-1",
      "region": [[0, 10000], [0, 10000]],
      "duration": 100,            # steps 1..duration, dt seconds apart
      "dt": 1.0,
      "seed": 0,
      "motion": {"sigma_v": 5.0, "survival_probability": 0.98},
      "sensors": [{"sigma": 14.0, "detection_probability": 0.9, "clutter_rate": 15.0}, ...],
      "birth": {"existence": 0.06, "cov_diag": [1e4, 1e4, 400, 400],
                "means": [[3500, 1500, 0, 0], ...]},
      "tracks": [{"id": 0, "birth": 1, "death": 70, "state": [x, y, vx, vy]}, ...]
    }

A track exists at steps ``birth <= k < death``; ``"death": null`` keeps it
alive to the end. ``state`` is the state at the birth step.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import SchemaError
from .glmb import BirthModel, MeasurementScan, MotionModel, SensorModel

REGION = ((0.0, 10000.0), (0.0, 10000.0))
BIRTH_COV_DIAG = (100.0 ** 2, 100.0 ** 2, 20.0 ** 2, 20.0 ** 2)
BIRTH_EXISTENCE = 0.06
SCENARIO1_BIRTH_MEANS = ((3500.0, 1500.0, 0.0, 0.0), (4500.0, 1500.0, 0.0, 0.0),
                         (3150.0, 4900.0, 0.0, 0.0), (6050.0, 7150.0, 0.0, 0.0))


@dataclass(frozen=True)
class TruthTrack:
    id: int
    birth: int
    death: int | None
    state: tuple

    def alive(self, step):
        return self.birth <= step and (self.death is None or step < self.death)


@dataclass(frozen=True)
class SensorSpec:
    sigma: float = 14.0
    detection_probability: float = 0.9
    clutter_rate: float = 15.0


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    region: tuple
    duration: int
    tracks: tuple
    sensors: tuple = (SensorSpec(), SensorSpec())
    birth_means: tuple = SCENARIO1_BIRTH_MEANS
    birth_cov_diag: tuple = BIRTH_COV_DIAG
    birth_existence: float = BIRTH_EXISTENCE
    sigma_v: float = 5.0
    survival_probability: float = 0.98
    dt: float = 1.0
    seed: int = 0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        errors = _config_errors(self)
        if errors:
            raise SchemaError("; ".join(errors))

    @property
    def motion(self):
        return MotionModel.constant_velocity(self.dt, self.sigma_v, self.survival_probability)

    def sensor(self, i):
        s = self.sensors[i]
        return SensorModel.position(s.sigma, s.detection_probability, s.clutter_rate, self.region)

    @property
    def sensor_models(self):
        return [self.sensor(i) for i in range(len(self.sensors))]

    @property
    def birth(self):
        return BirthModel.gaussian([np.array(m, float) for m in self.birth_means],
                                   np.diag(self.birth_cov_diag), self.birth_existence)

    @property
    def steps(self):
        return range(1, self.duration + 1)


def _config_errors(c):
    errors = []
    (x0, x1), (y0, y1) = c.region
    if not (x0 < x1 and y0 < y1):
        errors.append("region: bounds must be increasing")
    if c.duration < 1:
        errors.append("duration: must be at least 1")
    if c.dt <= 0:
        errors.append("dt: must be positive")
    if not c.sensors:
        errors.append("sensors: at least one sensor is required")
    ids = set()
    for k, t in enumerate(c.tracks):
        where = f"tracks[{k}]"
        if t.id in ids:
            errors.append(f"{where}.id: duplicate id {t.id}")
        ids.add(t.id)
        if len(t.state) != 4:
            errors.append(f"{where}.state: expected [x, y, vx, vy]")
            continue
        if t.death is not None and t.death <= t.birth:
            errors.append(f"{where}: birth step {t.birth} is not before death step {t.death}")
        if not (x0 <= t.state[0] <= x1 and y0 <= t.state[1] <= y1):
            errors.append(f"{where}.state: initial position outside the region")
    if len(c.birth_cov_diag) != 4 or min(c.birth_cov_diag, default=0) <= 0:
        errors.append("birth.cov_diag: expected four positive variances")
    for k, m in enumerate(c.birth_means):
        if len(m) != 4:
            errors.append(f"birth.means[{k}]: expected [x, y, vx, vy]")
    if not 0.0 <= c.birth_existence <= 1.0:
        errors.append("birth.existence: must lie in [0, 1]")
    return errors


# --- truth and scans --------------------------------------------------------

def track_state(track, step, dt=1.0):
    x = np.array(track.state, dtype=float)
    t = (step - track.birth) * dt
    return np.array([x[0] + x[2] * t, x[1] + x[3] * t, x[2], x[3]])


def generate_truth(config, seed=None):
    """Per step (index 0 is step 1): list of ``(state, track id)``.

    The truth is deterministic; ``seed`` is accepted for interface symmetry.
    """
    return [[(track_state(t, k, config.dt), t.id) for t in config.tracks if t.alive(k)]
            for k in config.steps]


def truth_positions(truth_step):
    return np.array([s[:2] for s, _ in truth_step]).reshape(-1, 2)


def sensor_rng(seed, sensor):
    """The documented scan stream of ``sensor`` for base seed ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(sensor)])))


def _noise_factor(R):
    # Cholesky factor when R is positive definite (the same draws as
    # Generator.multivariate_normal); symmetric square root otherwise
    try:
        return np.linalg.cholesky(R)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(R)
        return vecs * np.sqrt(np.clip(vals, 0.0, None))


def generate_scan(states, sensor, rng, step=0):
    """One scan: independent detections with Gaussian noise plus Poisson clutter.

    Detections falling outside the sensor region are lost. Points are returned
    in random order.
    """
    states = np.asarray(states, dtype=float).reshape(-1, sensor.observation.shape[1])
    detected = rng.random(len(states)) < sensor.detection_probability
    z = states[detected] @ sensor.observation.T
    z = z + rng.standard_normal(z.shape) @ _noise_factor(sensor.noise).T
    lo = np.array([b[0] for b in sensor.region])
    hi = np.array([b[1] for b in sensor.region])
    z = z[np.all((z >= lo) & (z <= hi), axis=1)]
    n_clutter = rng.poisson(sensor.clutter_rate)
    clutter = lo + rng.random((n_clutter, 2)) * (hi - lo)
    points = np.vstack([z, clutter])
    return MeasurementScan(step, points[rng.permutation(len(points))])


def generate_scans(config, truth, sensor, seed, stream=None):
    """All scans of one sensor for one Monte Carlo seed.

    ``stream`` selects the random stream (default: the sensor's own).
    """
    rng = sensor_rng(seed, sensor if stream is None else stream)
    model = config.sensor(sensor)
    return [generate_scan(np.array([s for s, _ in truth_k]), model, rng, k)
            for k, truth_k in zip(config.steps, truth)]


# --- reference scenarios ----------------------------------------------------

def _line(track_id, birth, death, start, via, at, region=REGION):
    """Track born at ``start`` on step ``birth`` that passes ``via`` on step ``at``.

    The track dies on ``death`` or on the first step it is outside ``region``,
    whichever comes first.
    """
    start = np.array(start, float)
    v = (np.array(via, float) - start) / (at - birth)
    lo = np.array([b[0] for b in region])
    hi = np.array([b[1] for b in region])
    with np.errstate(divide="ignore", invalid="ignore"):
        exits = np.where(v > 0, (hi - start) / v, np.where(v < 0, (lo - start) / v, np.inf))
    exit_step = birth + int(np.floor(exits.min())) + 1 if np.isfinite(exits.min()) else None
    if exit_step is not None and (death is None or exit_step < death):
        death = exit_step
    return TruthTrack(track_id, birth, death, (start[0], start[1], v[0], v[1]))


def scenario1(duration=100, seed=0, intersection_step=20, rendezvous_step=80):
    """Five straight-line targets born at the four birth locations.

    Two targets cross at (4000, 2200) on ``intersection_step`` and three
    targets meet at (6000, 4900) on ``rendezvous_step``; there are three
    births after the first step and three deaths with the default timing.
    Birth and death steps scale with ``rendezvous_step``.
    """
    r = rendezvous_step

    def at(fraction):
        return max(1, min(r - 1, round(fraction * r)))

    tracks = (
        _line(0, 1, round(70 * r / 80), (3500, 1500), (4000, 2200), intersection_step),
        _line(1, 1, round(60 * r / 80), (4500, 1500), (4000, 2200), intersection_step),
        _line(2, at(0.25), None, (3150, 4900), (6000, 4900), r),
        _line(3, at(0.375), round(95 * r / 80), (6050, 7150), (6000, 4900), r),
        _line(4, at(0.125), None, (4500, 1500), (6000, 4900), r),
    )
    tracks = tuple(t if t.death is None or t.death <= duration else TruthTrack(t.id, t.birth, None, t.state)
                   for t in tracks)
    return ScenarioConfig("scenario-1", REGION, duration, tracks, seed=seed,
                          meta={"intersection": ((4000.0, 2200.0), intersection_step),
                                "rendezvous": ((6000.0, 4900.0), r)})


SCENARIO2_BIRTH_MEANS = ((2000.0, 5000.0, 0.0, 0.0), (2000.0, 5250.0, 0.0, 0.0),
                         (2000.0, 4750.0, 0.0, 0.0), (3200.0, 5200.0, 0.0, 0.0))


def scenario2(duration=100, seed=0):
    """Four eastbound targets inside a 500 m wide band.

    Three start together and one is born on step 30. Target 1 crosses target
    0 on step 51 and target 3 crosses it on step 80; targets 2 and 1 die on
    steps 45 and 75.
    """
    tracks = (
        TruthTrack(0, 1, None, (2000.0, 5000.0, 40.0, 0.0)),
        TruthTrack(1, 1, 75, (2000.0, 5250.0, 40.0, -5.0)),
        TruthTrack(2, 1, 45, (2000.0, 4750.0, 40.0, 0.0)),
        TruthTrack(3, 30, None, (3200.0, 5200.0, 40.0, -4.0)),
    )
    return ScenarioConfig("scenario-2", REGION, duration, tracks, birth_means=SCENARIO2_BIRTH_MEANS,
                          seed=seed)


# --- files ------------------------------------------------------------------

def config_to_dict(c):
    return {
        "name": c.name,
        "region": [list(b) for b in c.region],
        "duration": c.duration,
        "dt": c.dt,
        "seed": c.seed,
        "motion": {"sigma_v": c.sigma_v, "survival_probability": c.survival_probability},
        "sensors": [{"sigma": s.sigma, "detection_probability": s.detection_probability,
                     "clutter_rate": s.clutter_rate} for s in c.sensors],
        "birth": {"existence": c.birth_existence, "cov_diag": list(c.birth_cov_diag),
                  "means": [list(m) for m in c.birth_means]},
        "tracks": [{"id": t.id, "birth": t.birth, "death": t.death, "state": list(t.state)}
                   for t in c.tracks],
    }


def _get(obj, key, kind, where, default=None, required=True):
    if key not in obj:
        if required:
            raise SchemaError(f"{where}{key}: missing field")
        return default
    value = obj[key]
    if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if kind in (list, dict, str) and isinstance(value, kind):
        return value
    raise SchemaError(f"{where}{key}: expected {kind.__name__}, got {type(value).__name__}")


def _float_list(value, where, length=None):
    if not isinstance(value, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                                              for v in value):
        raise SchemaError(f"{where}: expected a list of numbers")
    if length is not None and len(value) != length:
        raise SchemaError(f"{where}: expected {length} numbers, got {len(value)}")
    return tuple(float(v) for v in value)


def config_from_dict(d):
    if not isinstance(d, dict):
        raise SchemaError("scenario: expected a JSON object")
    known = {"name", "region", "duration", "dt", "seed", "motion", "sensors", "birth", "tracks"}
    unknown = sorted(set(d) - known)
    if unknown:
        raise SchemaError(f"{unknown[0]}: unknown field")
    region = _get(d, "region", list, "")
    if len(region) != 2:
        raise SchemaError("region: expected [[xmin, xmax], [ymin, ymax]]")
    region = tuple(_float_list(b, f"region[{i}]", 2) for i, b in enumerate(region))
    motion = _get(d, "motion", dict, "", {}, required=False)
    sensors = []
    for i, s in enumerate(_get(d, "sensors", list, "")):
        if not isinstance(s, dict):
            raise SchemaError(f"sensors[{i}]: expected an object")
        where = f"sensors[{i}]."
        sensors.append(SensorSpec(_get(s, "sigma", float, where, 14.0, False),
                                  _get(s, "detection_probability", float, where, 0.9, False),
                                  _get(s, "clutter_rate", float, where, 15.0, False)))
    birth = _get(d, "birth", dict, "")
    means = _get(birth, "means", list, "birth.")
    tracks = []
    for i, t in enumerate(_get(d, "tracks", list, "")):
        if not isinstance(t, dict):
            raise SchemaError(f"tracks[{i}]: expected an object")
        where = f"tracks[{i}]."
        death = t.get("death")
        if death is not None and (not isinstance(death, int) or isinstance(death, bool)):
            raise SchemaError(f"{where}death: expected int or null")
        tracks.append(TruthTrack(_get(t, "id", int, where, i, False), _get(t, "birth", int, where),
                                 death, _float_list(t.get("state"), f"{where}state", 4)))
    return ScenarioConfig(
        name=_get(d, "name", str, "", "scenario", False),
        region=region,
        duration=_get(d, "duration", int, ""),
        tracks=tuple(tracks),
        sensors=tuple(sensors),
        birth_means=tuple(_float_list(m, f"birth.means[{i}]", 4) for i, m in enumerate(means)),
        birth_cov_diag=_float_list(_get(birth, "cov_diag", list, "birth.", list(BIRTH_COV_DIAG), False),
                                   "birth.cov_diag", 4),
        birth_existence=_get(birth, "existence", float, "birth.", BIRTH_EXISTENCE, False),
        sigma_v=_get(motion, "sigma_v", float, "motion.", 5.0, False),
        survival_probability=_get(motion, "survival_probability", float, "motion.", 0.98, False),
        dt=_get(d, "dt", float, "", 1.0, False),
        seed=_get(d, "seed", int, "", 0, False),
    )


def loads_config(text):
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return config_from_dict(d)


def load_config(path):
    with open(path, encoding="utf-8") as f:
        return loads_config(f.read())


def save_config(config, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(config_to_dict(config), f, indent=2)
        f.write("\n")


def write_truth_csv(truth, path, steps=None):
    steps = steps or range(1, len(truth) + 1)
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["step", "id", "x", "y", "vx", "vy"])
        for k, truth_k in zip(steps, truth):
            for s, tid in truth_k:
                w.writerow([k, tid] + [f"{v:.6f}" for v in s])


def write_scans_csv(scans_by_sensor, path):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["step", "sensor", "x", "y"])
        for sensor, scans in enumerate(scans_by_sensor):
            for scan in scans:
                for x, y in scan.points:
                    w.writerow([scan.step, sensor, f"{x:.6f}", f"{y:.6f}"])
