"""Command-line experiment runner.

Every subcommand runs one experiment and writes its data either as CSV
(grids, with the resolved configuration in ``<output>.config.json``) or
as JSON (structured results with the configuration embedded under
``"config"``).  Without ``--output`` the JSON document goes to stdout.

Parameters can also come from ``--config FILE.json``; command-line flags
take precedence.  Unknown keys are rejected.  Angles accept a ``pi``
literal, e.g. ``--g 0.5pi``, ``--g pi/4`` or ``--g -pi``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from pathlib import Path

import numpy as np

from .errors import WalkError
from .evolution import (Lattice, TwoParticleState, build_interacting_step, center_of_mass_distribution,
                        evolve, joint_distribution, marginal, near_diagonal_probability, outer_peaks)
from .molecule import (asymptotic_distribution, bound_state, dispersion, integrated_capture, max_speed,
                       molecule_collision)
from .qca import (DOWN, UP, CellCoin, GasState, bose_collision_step, bose_pair_state,
                  bose_singlet_collision_coin, gas_from_bose_pair, qca_step, restrict_to_symmetric)
from .spectral import (band_gap, circular_distance, defect_coin_for, defect_ring_matrix, refined_R,
                       ring_spectrum)
from .walk import (SINGLET, TRIPLET_ZERO, flat_walk, hadamard_coin, hadamard_walk, phase_of,
                   relative_symbol, singlet_collision_coin)

_ANGLE = re.compile(r"^\s*([+-]?)\s*(\d*\.?\d*(?:[eE][+-]?\d+)?)\s*(\*?\s*pi)?\s*(?:/\s*(\d*\.?\d+))?\s*$")


def parse_angle(text) -> float:
    """Parse ``1.2``, ``pi``, ``0.5pi``, ``-pi/4`` or ``3pi/4`` as radians."""
    if isinstance(text, (int, float)):
        return float(text)
    m = _ANGLE.match(str(text))
    if not m or not (m.group(2) or m.group(3)):
        raise ValueError(f"cannot parse angle {text!r}")
    sign, num, has_pi, den = m.groups()
    value = float(num) if num else 1.0
    if has_pi:
        value *= math.pi
    if den:
        value /= float(den)
    return -value if sign == "-" else value


def _branch(text) -> int:
    if str(text) in ("+", "1", "+1", "plus"):
        return 1
    if str(text) in ("-", "-1", "minus"):
        return -1
    raise ValueError(f"branch must be + or -, got {text!r}")


# experiment parameters: name -> (converter, default, help)
PARAMS: dict[str, dict[str, tuple]] = {
    "evolve": {
        "g": (parse_angle, math.pi, "singlet collision phase"),
        "t": (int, 50, "number of steps"),
        "L": (int, None, "window radius (default t + 1)"),
        "initial": (str, "singlet", "singlet | triplet"),
    },
    "spectrum": {
        "M": (int, 28, "ring size"),
        "g": (parse_angle, math.pi, "singlet collision phase"),
    },
    "dispersion": {
        "g": (parse_angle, math.pi, "collision phase"),
        "grid": (int, 101, "number of momenta on [-pi, pi]"),
    },
    "velocity": {
        "g": (parse_angle, math.pi, "collision phase"),
        "grid": (int, 10_000, "scan points for the maximal speed"),
    },
    "capture": {
        "g": (parse_angle, math.pi, "collision phase"),
        "grid": (int, 2048, "momentum quadrature points"),
    },
    "boundstate": {
        "p": (parse_angle, math.pi / 2, "total momentum"),
        "g": (parse_angle, math.pi, "collision phase"),
        "branch": (_branch, 1, "dispersion branch (+ or -)"),
        "cutoff": (int, None, "relative-coordinate cutoff (default: tail below 1e-10)"),
    },
    "asymptotic": {
        "g": (parse_angle, math.pi, "collision phase"),
        "bins": (int, 201, "velocity bins on [-1, 1]"),
        "grid": (int, 2048, "momentum samples"),
    },
    "qca": {
        "M": (int, 12, "number of cells"),
        "g": (parse_angle, math.pi, "phase of the doubly occupied cell"),
        "t": (int, 6, "number of steps"),
    },
    "fastmol": {
        "t": (int, 20, "number of steps"),
    },
    "defect-synthesis": {
        "eps": (float, 0.1, "coin rotation angle of the flat walk"),
        "M": (int, 32, "ring size per axis"),
        "z_phase": (parse_angle, math.pi / 2, "target eigenphase"),
        "seed": (int, 0, "seed for the starting vector of the sparse eigensolver"),
    },
}
COMMON = ("output",)


class ConfigError(WalkError):
    pass


def resolve_config(experiment: str, given: dict) -> dict:
    """Defaults overlaid with ``given``; unknown keys raise :class:`ConfigError`."""
    if experiment not in PARAMS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    spec = PARAMS[experiment]
    out = {k: v[1] for k, v in spec.items()}
    for key, value in given.items():
        if key in COMMON:
            continue
        if key not in spec:
            raise ConfigError(f"unknown key {key!r} for experiment {experiment!r}")
        if value is None:
            continue
        try:
            out[key] = spec[key][0](value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid value for key {key!r}: {exc}") from None
    return out


def _fmt(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise ConfigError("non-finite number in output")
    return format(x, ".17g")


def dumps(obj) -> str:
    """JSON with every float written to 17 significant digits."""
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(float(obj))
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return _fmt(float(v))
    return str(v)


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


# experiments ------------------------------------------------------------------

def _complex(z) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def run_evolve(cfg):
    t = cfg["t"]
    lat = Lattice.window(cfg["L"] if cfg["L"] is not None else t + 1)
    states = {"singlet": SINGLET, "triplet": TRIPLET_ZERO}
    if cfg["initial"] not in states:
        raise ConfigError(f"invalid value for key 'initial': {cfg['initial']!r}")
    step = build_interacting_step(hadamard_walk(), singlet_collision_coin(phase_of(cfg["g"])), lat)
    st = evolve(TwoParticleState.localized(lat, states[cfg["initial"]]), step, t)
    prob = joint_distribution(st)
    pos = lat.positions
    centers, com = center_of_mass_distribution(prob, pos)
    summary = {
        "total_probability": float(prob.sum()),
        "near_diagonal_probability": near_diagonal_probability(prob, pos, 5),
        "marginal_peaks": list(outer_peaks(marginal(prob), pos)),
        "center_of_mass_peaks": list(outer_peaks(com, centers)),
    }
    rows = [(int(x1), int(x2), float(prob[i, j])) for i, x1 in enumerate(pos) for j, x2 in enumerate(pos)]
    return summary, (("x1", "x2", "probability"), rows)


def run_spectrum(cfg):
    table = ring_spectrum(cfg["M"], hadamard_walk(), molecule_collision(cfg["g"]))
    rows = [{"p": r.p, "phases": [float(v) for v in r.phases], "in_gap": [bool(v) for v in r.in_gap]}
            for r in table.rows]
    return {"ring_size": table.ring_size, "gap_tolerance": table.tolerance,
            "gap_count": table.gap_count(), "rows": rows}, None


def run_dispersion(cfg):
    rows = []
    for p in np.linspace(-math.pi, math.pi, cfg["grid"]):
        plus, minus = dispersion(float(p), cfg["g"])
        rows.append((float(p), plus.omega, minus.omega, plus.allowed, minus.allowed,
                     plus.group_velocity, minus.group_velocity))
    header = ("p", "omega_plus", "omega_minus", "allowed_plus", "allowed_minus", "velocity_plus", "velocity_minus")
    allowed = sum(int(r[3]) + int(r[4]) for r in rows)
    return {"allowed_points": allowed}, (header, rows)


def run_velocity(cfg):
    ms = max_speed(cfg["g"], cfg["grid"])
    return {"max_speed": ms.speed, "p": ms.p, "unconstrained": ms.unconstrained,
            "unconstrained_allowed": ms.unconstrained_allowed}, None


def run_capture(cfg):
    return {"integrated_capture": integrated_capture(cfg["g"], cfg["grid"])}, None


def run_boundstate(cfg):
    rec = bound_state(cfg["p"], cfg["g"], cfg["branch"], cfg["cutoff"])
    amps = [{"j": int(j), "amplitude": [_complex(v) for v in rec.at(j)]} for j in rec.positions]
    return {"p": rec.p, "g": rec.g, "branch": rec.branch, "omega": rec.omega, "eta": rec.eta,
            "v1": rec.v1, "p_cap": rec.p_cap, "cutoff": rec.cutoff, "amplitudes": amps}, None


def run_asymptotic(cfg):
    dist = asymptotic_distribution(cfg["g"], cfg["bins"], cfg["grid"])
    rows = [(float(v), float(d)) for v, d in zip(dist.centers, dist.density)]
    return {"mass": dist.mass}, (("v", "density"), rows)


def run_qca(cfg):
    m, t = cfg["M"], cfg["t"]
    gamma = phase_of(cfg["g"])
    h = hadamard_coin()
    coin = CellCoin(h, gamma)
    lat = Lattice.ring(m)
    gas = GasState.from_modes(m, {((m // 2, UP), (m // 2, DOWN)): 1.0})
    pair = bose_pair_state(gas, lat)
    step = build_interacting_step(hadamard_walk(), bose_singlet_collision_coin(h, gamma), lat)
    rows = []
    for s in range(1, t + 1):
        gas, pair = qca_step(gas, coin), step(pair)
        occ = gas.particle_numbers()
        rows.append({"t": s, "sector_probabilities": {str(k): v for k, v in occ.items()},
                     "distance_to_pair_walk": gas_from_bose_pair(pair, atol=1e-10).distance(gas)})
    return {"steps": rows}, None


def run_fastmol(cfg):
    t = cfg["t"]
    lat = Lattice.window(t + 1)
    h = hadamard_coin().matrix
    step = bose_collision_step(hadamard_walk(), restrict_to_symmetric(np.kron(h, h)), lat)
    st = TwoParticleState.localized(lat, [1.0, 0.0, 0.0, 0.0])
    rows = []
    for s in range(1, t + 1):
        st = step(st)
        prob = joint_distribution(st)
        occupied = np.argwhere(prob > 1e-12)
        rows.append({"t": s, "occupied": [[int(a - lat.origin), int(b - lat.origin)] for a, b in occupied],
                     "max_probability": float(prob.max())})
    return {"steps": rows}, None


def run_defect_synthesis(cfg):
    import scipy.sparse.linalg as sla

    m = cfg["M"]
    rel = relative_symbol(flat_walk(2, cfg["eps"]), [0.0, 0.0])
    z = phase_of(cfg["z_phase"])
    gaps = band_gap(rel, 64)
    if not any(a.contains(cfg["z_phase"]) for a in gaps):
        raise ConfigError(f"invalid value for key 'z_phase': {cfg['z_phase']:.6g} is not in a verified gap")
    r = refined_R(z, rel, start=32)
    coin = defect_coin_for(z, r)
    mat = defect_ring_matrix(rel, coin, m, sparse=True).tocsc()
    v0 = np.random.default_rng(cfg["seed"]).normal(size=mat.shape[0]).astype(complex)
    vals = sla.eigs(mat, k=6, sigma=z, v0=v0, return_eigenvectors=False)
    dist = np.sort(circular_distance(np.angle(vals), cfg["z_phase"]))
    return {"gaps": [[a.start, a.width] for a in gaps], "quadrature_residual": r.quadrature_residual,
            "coin_real": coin.matrix.real.tolist(), "coin_imag": coin.matrix.imag.tolist(),
            "nearest_distances": [float(d) for d in dist],
            "multiplicity": int(np.sum(dist < 1e-6))}, None


RUNNERS = {
    "evolve": run_evolve, "spectrum": run_spectrum, "dispersion": run_dispersion,
    "velocity": run_velocity, "capture": run_capture, "boundstate": run_boundstate,
    "asymptotic": run_asymptotic, "qca": run_qca, "fastmol": run_fastmol,
    "defect-synthesis": run_defect_synthesis,
}


def run(experiment: str, given: dict, output: str | None = None, stdout=None) -> int:
    """Run one experiment and write its outputs; returns the exit status."""
    stdout = stdout or sys.stdout
    cfg = resolve_config(experiment, given)
    summary, table = RUNNERS[experiment](cfg)
    config = {"experiment": experiment, **cfg}
    if output and output.endswith(".csv"):
        if table is None:
            raise ConfigError(f"invalid value for key 'output': {experiment} produces JSON, not CSV")
        Path(output).write_text(to_csv(*table))
        Path(output + ".config.json").write_text(dumps({"config": config, "summary": summary}) + "\n")
        return 0
    doc = {"config": config, **summary}
    if table is not None:
        doc["table"] = {"columns": list(table[0]), "rows": [list(r) for r in table[1]]}
    text = dumps(doc) + "\n"
    if output:
        Path(output).write_text(text)
    else:
        stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boundwalk", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name, spec in PARAMS.items():
        p = sub.add_parser(name)
        for key, (_, default, text) in spec.items():
            p.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None, help=f"{text} (default {default})")
        p.add_argument("--config", default=None, help="JSON file with parameters")
        p.add_argument("--output", default=None, help="output path (.csv or .json); stdout if omitted")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    given: dict = {}
    try:
        if args.config:
            loaded = json.loads(Path(args.config).read_text())
            if not isinstance(loaded, dict):
                raise ConfigError("config file must hold a JSON object")
            given.update(loaded)
        flags = {k: v for k, v in vars(args).items() if k not in ("experiment", "config", "output") and v is not None}
        given.update(flags)
        output = args.output or given.get("output")
        return run(args.experiment, given, output)
    except WalkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
