"""Command line front end.

Subcommands
-----------
decompose   print the Bloch decomposition of a state
dmax        maximize the cyclic-operation shift over the commutant
detect      classify a state from its maximal shift and PPT test
scan        sweep a state family and report per-state shift data
chsh        run the two-stage CHSH reconstruction of a phase operation

States are named either by a builtin pattern (``bell``, ``schmidt:0.6``,
``werner:0.5``, ``cc5050``, ``maxmixed:2x3``) or by a path to a JSON
file with ``dims`` and a row-major ``matrix`` of [re, im] pairs.

Every numeric option can also be set through an environment variable
``CYCSHIFT_<NAME>`` (``CYCSHIFT_RESTARTS``, ``CYCSHIFT_TOL_PSD``, ...);
a command line flag wins over the environment, which wins over the
built-in default.

Exit codes: 0 success, 2 bad input or unrecoverable protocol geometry,
3 internal consistency failure (two formulas disagreeing, which means a
bug or a numerically hostile input, never a normal outcome).
"""

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .analysis import SEPARABLE_BOUND, detect, ppt_test
from .bloch import decompose
from .chsh import run_protocol
from .cyclic import d_max, phase_cyclic, shift_direct
from .errors import ConsistencyError, RecoveryError
from .states import (
    random_state_at,
    resolve_builtin,
    schmidt_state,
    separable_at,
    state_from_json,
    werner_state,
)

ENV_PREFIX = "CYCSHIFT_"

DEFAULTS = {
    "seed": 0,
    "restarts": 16,
    "workers": 1,
    "tol_herm": 1e-10,
    "tol_psd": 1e-10,
    "tol_cyclic": 1e-9,
    "eps_deg": 1e-9,
    "tol_bound": 1e-9,
}
_INT_OPTIONS = {"seed", "restarts", "workers"}

SCAN_FAMILIES = ("separable", "werner-grid", "schmidt-grid", "random")
SCAN_SCHEMA = "scan-schema=v1"
SCAN_HEADER = "index,family,param,d_max,beta_norm,ppt_entangled,bound_violated"


@dataclass(frozen=True)
class RunConfig:
    """Resolved numeric options shared by all subcommands."""

    seed: int = 0
    restarts: int = 16
    workers: int = 1
    tol_herm: float = 1e-10
    tol_psd: float = 1e-10
    tol_cyclic: float = 1e-9
    eps_deg: float = 1e-9
    tol_bound: float = 1e-9


def _resolve_config(args):
    values = {}
    for key, default in DEFAULTS.items():
        caster = int if key in _INT_OPTIONS else float
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = caster(flag)
            continue
        env_name = ENV_PREFIX + key.upper()
        raw = os.environ.get(env_name)
        if raw is None:
            values[key] = default
            continue
        try:
            values[key] = caster(raw)
        except ValueError:
            raise ValueError(
                f"environment variable {env_name} must be {caster.__name__}, "
                f"got {raw!r}"
            ) from None
    config = RunConfig(**values)
    if config.seed < 0:
        raise ValueError(f"seed must be >= 0, got {config.seed}")
    if config.restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {config.restarts}")
    if config.workers < 1:
        raise ValueError(f"workers must be >= 1, got {config.workers}")
    for key in ("tol_herm", "tol_psd", "tol_cyclic", "eps_deg", "tol_bound"):
        if getattr(config, key) <= 0.0:
            raise ValueError(f"{key} must be positive, got {getattr(config, key)}")
    return config


def _load_state(name_or_path, config):
    built = resolve_builtin(name_or_path)
    if built is not None:
        return built
    try:
        with open(name_or_path, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ValueError(
            f"state {name_or_path!r} is neither a builtin name nor a readable file"
        ) from None
    except json.JSONDecodeError as exc:
        raise ValueError(
            f"state file {name_or_path!r} is not valid JSON: {exc}"
        ) from None
    return state_from_json(data, tol_herm=config.tol_herm, tol_psd=config.tol_psd)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {key: _jsonable(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(value) for value in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return [[float(z.real), float(z.imag)] for z in obj.reshape(-1)]
        return [float(x) for x in obj.reshape(-1)]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj


def _json_text(payload):
    return json.dumps(payload, indent=2) + "\n"


def _write(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _cmd_decompose(args, config):
    state = _load_state(args.state, config)
    form = decompose(state)
    payload = {
        "dims": [form.dim_a, form.dim_b],
        "r_a": [float(x) for x in form.r_a],
        "r_b": [float(x) for x in form.r_b],
        "beta": [[float(x) for x in row] for row in form.beta],
        "r_a_norm": float(np.linalg.norm(form.r_a)),
        "r_b_norm": float(np.linalg.norm(form.r_b)),
        "beta_norm": float(form.beta_norm),
    }
    return _json_text(payload)


def _unitary_payload(unit):
    flat = unit.matrix.reshape(-1)
    return {
        "dim": unit.dim,
        "matrix": [[float(z.real), float(z.imag)] for z in flat],
        "block_sizes": [int(s) for s in unit.structure.block_sizes],
        "eigenvalues": [float(w) for w in unit.structure.eigenvalues],
    }


def _cmd_dmax(args, config):
    state = _load_state(args.state, config)
    result = d_max(
        state,
        restarts=config.restarts,
        rng=np.random.default_rng(config.seed),
        eps_deg=config.eps_deg,
    )
    payload = {
        "d": result.d,
        "formula": result.formula,
        "method": result.method,
        "restarts": result.restarts,
        "certified": result.certified,
        "cross_check_residual": result.cross_check_residual,
        "params": _jsonable(result.params),
        "unitary": _unitary_payload(result.unitary),
    }
    return _json_text(payload)


def _cmd_detect(args, config):
    state = _load_state(args.state, config)
    report = detect(
        state,
        restarts=config.restarts,
        rng=np.random.default_rng(config.seed),
        tol_bound=config.tol_bound,
    )
    return _json_text(report.to_json_dict())


def _parse_axis(text):
    if text in ("x", "y", "z"):
        return text
    if text == "auto":
        return None
    parts = text.split(",")
    if len(parts) == 3:
        try:
            return np.array([float(p) for p in parts])
        except ValueError:
            pass
    raise ValueError(
        f"axis must be x, y, z, auto, or three comma-separated floats, got {text!r}"
    )


def _cmd_chsh(args, config):
    state = _load_state(args.state, config)
    unit = phase_cyclic(
        state,
        args.phi,
        axis=_parse_axis(args.axis),
        tol_cyclic=config.tol_cyclic,
        eps_deg=config.eps_deg,
    )
    transcript = run_protocol(
        state, unit, restarts=config.restarts, rng=np.random.default_rng(config.seed)
    )
    payload = {
        "phi": float(args.phi),
        "axis": args.axis,
        "d_direct": shift_direct(state, unit),
    }
    payload.update(transcript.to_json_dict())
    return _json_text(payload)


def _scan_sample(family, index, count, seed):
    """State and scalar parameter for one scan row.

    The parameter column records the grid value for grid families, the
    ensemble size for separable samples and the purity for random ones.
    """
    if family == "separable":
        state, ensemble = separable_at(seed, index)
        return state, float(ensemble.m)
    if family == "werner-grid":
        p = float(np.linspace(0.0, 1.0, count)[index])
        return werner_state(p), p
    if family == "schmidt-grid":
        k1 = float(np.linspace(0.0, 1.0, count)[index])
        return schmidt_state(k1, math.sqrt(max(0.0, 1.0 - k1 * k1))), k1
    if family == "random":
        state = random_state_at(seed, index)
        return state, state.purity()
    raise ValueError(f"unknown scan family {family!r}")


def _scan_row(task):
    family, index, count, seed, restarts, eps_deg, tol_bound = task
    state, param = _scan_sample(family, index, count, seed)
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(index, 1))
    )
    result = d_max(state, restarts=restarts, rng=rng, eps_deg=eps_deg)
    beta_norm = float(decompose(state).beta_norm)
    _, ppt_entangled = ppt_test(state)
    bound_violated = result.d > SEPARABLE_BOUND + tol_bound
    return (index, family, param, result.d, beta_norm, ppt_entangled, bound_violated)


def _cmd_scan(args, config):
    if args.count < 1:
        raise ValueError(f"count must be >= 1, got {args.count}")
    tasks = [
        (args.family, i, args.count, config.seed, config.restarts,
         config.eps_deg, config.tol_bound)
        for i in range(args.count)
    ]
    if config.workers == 1:
        rows = [_scan_row(task) for task in tasks]
    else:
        chunk = max(1, args.count // (config.workers * 4))
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(_scan_row, tasks, chunksize=chunk))
    rows.sort(key=lambda row: row[0])
    max_d = max(row[3] for row in rows)

    if args.format == "json":
        payload = {
            "schema": "scan-v1",
            "family": args.family,
            "count": args.count,
            "seed": config.seed,
            "rows": [
                {
                    "index": index,
                    "family": family,
                    "param": param,
                    "d_max": d_value,
                    "beta_norm": beta_norm,
                    "ppt_entangled": bool(ppt_entangled),
                    "bound_violated": bool(bound_violated),
                }
                for index, family, param, d_value, beta_norm,
                    ppt_entangled, bound_violated in rows
            ],
            "max_d_max": max_d,
        }
        return _json_text(payload)

    lines = [f"# {SCAN_SCHEMA}", SCAN_HEADER]
    for index, family, param, d_value, beta_norm, ppt_entangled, bound_violated in rows:
        lines.append(
            f"{index},{family},{param!r},{d_value!r},{beta_norm!r},"
            f"{int(ppt_entangled)},{int(bound_violated)}"
        )
    lines.append(f"# max_d_max={max_d!r}")
    return "\n".join(lines) + "\n"


def _add_config_flags(parser):
    parser.add_argument("--seed", type=int, default=None,
                        help="base seed for samplers and optimizer restarts")
    parser.add_argument("--restarts", type=int, default=None,
                        help="multi-start count for the optimizers")
    parser.add_argument("--workers", type=int, default=None,
                        help="parallel worker processes (scan only)")
    parser.add_argument("--tol-herm", type=float, default=None, dest="tol_herm",
                        help="Hermiticity tolerance for state validation")
    parser.add_argument("--tol-psd", type=float, default=None, dest="tol_psd",
                        help="positivity tolerance for state validation")
    parser.add_argument("--tol-cyclic", type=float, default=None, dest="tol_cyclic",
                        help="commutation tolerance for cyclic unitaries")
    parser.add_argument("--eps-deg", type=float, default=None, dest="eps_deg",
                        help="eigenvalue gap below which levels count as degenerate")
    parser.add_argument("--tol-bound", type=float, default=None, dest="tol_bound",
                        help="margin when testing the separable shift bound")
    parser.add_argument("--out", default=None,
                        help="write the report to this file instead of stdout")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cycshift",
        description="State shifts of bipartite systems under local cyclic operations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    dec = sub.add_parser("decompose", help="Bloch decomposition of a state")
    dec.add_argument("--state", required=True,
                     help="builtin name (bell, schmidt:K1, werner:P, cc5050, "
                          "maxmixed:AxB) or JSON file path")
    _add_config_flags(dec)
    dec.set_defaults(handler=_cmd_decompose)

    dmx = sub.add_parser("dmax", help="maximal shift over all cyclic operations")
    dmx.add_argument("--state", required=True, help="builtin name or JSON file path")
    _add_config_flags(dmx)
    dmx.set_defaults(handler=_cmd_dmax)

    det = sub.add_parser("detect", help="classify a state from shift and PPT data")
    det.add_argument("--state", required=True, help="builtin name or JSON file path")
    _add_config_flags(det)
    det.set_defaults(handler=_cmd_detect)

    scn = sub.add_parser("scan", help="sweep a state family")
    scn.add_argument("--family", required=True, choices=SCAN_FAMILIES)
    scn.add_argument("--count", type=int, default=100,
                     help="number of states in the sweep")
    scn.add_argument("--format", choices=("csv", "json"), default="csv")
    _add_config_flags(scn)
    scn.set_defaults(handler=_cmd_scan)

    ch = sub.add_parser("chsh", help="two-stage CHSH shift reconstruction")
    ch.add_argument("--state", required=True, help="builtin name or JSON file path")
    ch.add_argument("--phi", type=float, default=math.pi,
                    help="rotation angle of the phase operation")
    ch.add_argument("--axis", default="z",
                    help="rotation axis: x, y, z, auto, or 'ux,uy,uz'")
    _add_config_flags(ch)
    ch.set_defaults(handler=_cmd_chsh)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _resolve_config(args)
        text = args.handler(args, config)
        _write(text, args.out)
    except ConsistencyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, RecoveryError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0
