"""Batch experiment harness: config in, CSV rows out.

A config is a flat ``key = value`` file; command-line flags override it::

    kind = beam-splitter
    epsilon = pi/36, pi/4, pi/2
    scheme = first_order
    steps = 1, 2, 4
    noise = casablanca
    fidelity = tomography
"""

from __future__ import annotations

import argparse
import ast
import csv
import io
import itertools
import logging
import math
import operator
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .bosons import (
    BosonRegister,
    FockState,
    beam_splitter_h,
    codeword_indices,
    codewords,
    single_mode_squeeze_h,
    two_mode_squeeze_h,
)
from .circuit import (
    Circuit,
    SchemeError,
    TrotterScheme,
    append_basis_rotation,
    append_mode_basis_rotation,
    compile_evolution,
    prepare_fock,
    to_qasm,
)
from .measure import (
    DegenerateResultError,
    TomogramSet,
    basis_state,
    calibration_circuits,
    calibration_confusion,
    evolved_state,
    fidelity_bs_tomographic,
    fidelity_p0,
    fidelity_pure,
    fidelity_sm_tomographic,
    mitigate,
    mode_density,
    normalize,
    post_select,
)
from .pauli import PauliSum
from .sim import PRESETS, BackendCapError, Counts, NoiseModel, density_matrix, execute, statevector
from .transpile import gate_counts, optimize

log = logging.getLogger(__name__)

KINDS = ("sm-squeeze-2exc", "sm-squeeze-4exc", "beam-splitter", "tm-squeeze")
FIDELITY_METHODS = ("p0", "tomography", "analytic")
TOMOGRAPHY_KINDS = ("sm-squeeze-2exc", "beam-splitter")
VACUUM_KINDS = ("sm-squeeze-2exc", "sm-squeeze-4exc", "tm-squeeze")
EXIT_OK, EXIT_CONFIG, EXIT_CAP = 0, 2, 3


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep over ``epsilon x steps``.

    For the single-mode kinds ``epsilon`` is the rescaled parameter
    ``eps_hat = eps / sqrt(2)`` used on plot axes; the bosonic evolution
    is ``exp(i sqrt(2) eps_hat S2)``. For the two-mode kinds it is the
    bosonic parameter itself.
    """

    kind: str = "sm-squeeze-2exc"
    epsilons: tuple[float, ...] = (0.05,)
    scheme: str = "exact"
    steps: tuple[int, ...] = (1,)
    noise: NoiseModel = PRESETS["ideal"]
    shots: int = 8192
    seed: int = 0
    fidelity: str = "p0"
    post_select: bool = True
    mitigate: bool = False
    opt_level: int = 2
    insert_barriers: bool = True

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown kind {self.kind!r}; choose from {KINDS}")
        if self.fidelity not in FIDELITY_METHODS:
            raise ConfigError(f"unknown fidelity method {self.fidelity!r}; choose from {FIDELITY_METHODS}")
        if self.fidelity == "tomography" and self.kind not in TOMOGRAPHY_KINDS:
            raise ConfigError(f"tomography is only supported for {TOMOGRAPHY_KINDS}")
        if self.fidelity == "p0" and self.kind not in VACUUM_KINDS:
            raise ConfigError("p0 fidelity needs a kind that starts from the vacuum")
        if self.scheme not in TrotterScheme.KINDS:
            raise ConfigError(f"unknown scheme {self.scheme!r}; choose from {TrotterScheme.KINDS}")
        if self.scheme == "exact" and self.kind == "sm-squeeze-4exc":
            raise ConfigError("sm-squeeze-4exc has non-commuting terms; use first_order or symmetric")
        if not self.epsilons or not self.steps:
            raise ConfigError("epsilon and steps lists must be non-empty")
        if any(s < 1 for s in self.steps):
            raise ConfigError("steps must be >= 1")
        if self.shots < 1:
            raise ConfigError("shots must be >= 1")
        if self.opt_level not in (0, 1, 2):
            raise ConfigError("opt_level must be 0, 1 or 2")


@dataclass(frozen=True)
class ResultRow:
    kind: str
    epsilon: float
    steps: int
    scheme: str
    noise: str
    shots: int
    seed: int
    fidelity: float
    fidelity_method: str
    retained_fraction: float
    cnot_count: int
    single_qubit_count: int


CSV_HEADER = tuple(f.name for f in fields(ResultRow))


# --- experiment definitions ---------------------------------------------------------------------


@dataclass(frozen=True)
class Experiment:
    reg: BosonRegister
    hamiltonian: PauliSum
    initial: FockState
    scale: float  # evolution time per unit of config epsilon


def experiment_for(kind: str) -> Experiment:
    if kind == "sm-squeeze-2exc":
        reg = BosonRegister(1, 2)
        return Experiment(reg, single_mode_squeeze_h(reg)[0], FockState(0), math.sqrt(2))
    if kind == "sm-squeeze-4exc":
        reg = BosonRegister(1, 4)
        return Experiment(reg, single_mode_squeeze_h(reg)[0], FockState(0), math.sqrt(2))
    if kind == "beam-splitter":
        reg = BosonRegister(2, 1)
        return Experiment(reg, beam_splitter_h(reg), FockState(1, 0), 1.0)
    if kind == "tm-squeeze":
        reg = BosonRegister(2, 1)
        return Experiment(reg, two_mode_squeeze_h(reg), FockState(0, 0), 1.0)
    raise ConfigError(f"unknown kind {kind!r}")


def build_circuit(cfg: ExperimentConfig, epsilon: float, steps: int) -> Circuit:
    exp = experiment_for(cfg.kind)
    scheme = TrotterScheme(cfg.scheme, 1 if cfg.scheme == "exact" else steps, cfg.insert_barriers)
    try:
        body = compile_evolution(exp.hamiltonian, exp.scale * epsilon, scheme)
    except SchemeError as exc:
        raise ConfigError(str(exc)) from exc
    return optimize(prepare_fock(exp.reg, exp.initial) + body, cfg.opt_level)


def _calibrate(n: int, cfg: ExperimentConfig, seed: int):
    cal = {
        prep: execute(append_basis_rotation(circ, "Z" * n), cfg.shots, cfg.noise, seed + k)
        for k, (prep, circ) in enumerate(calibration_circuits(n).items())
    }
    return calibration_confusion(cal)


def _process(counts: Counts, cfg: ExperimentConfig, words, confusion) -> tuple[dict, float]:
    """Mitigate, then post-select, then renormalize."""
    dist = mitigate(counts, confusion) if confusion is not None else normalize(counts)
    if not cfg.post_select:
        return dist, 1.0
    kept, frac = post_select(dist, words)
    if frac <= 0:
        raise DegenerateResultError("post-selection kept nothing")
    return normalize(kept), frac


def _fidelity(cfg: ExperimentConfig, c: Circuit, epsilon: float, seed: int) -> tuple[float, float]:
    """(fidelity, retained fraction) for one compiled circuit."""
    exp = experiment_for(cfg.kind)
    reg, n = exp.reg, exp.reg.n_qubits
    words = codewords(reg)

    if cfg.fidelity == "analytic":
        ref = evolved_state(exp.hamiltonian, exp.scale * epsilon, basis_state(reg, exp.initial))
        rho = statevector(c) if cfg.noise.gate_noiseless else density_matrix(c, cfg.noise)
        if rho.ndim == 1:
            rho = np.outer(rho, rho.conj())
        if not cfg.post_select:
            return fidelity_pure(ref, rho), 1.0
        block, frac = mode_density(reg, rho)
        return fidelity_pure(ref[codeword_indices(reg)], block), frac

    confusion = _calibrate(n, cfg, seed * 1000 + 900) if cfg.mitigate else None

    if cfg.fidelity == "p0":
        counts = execute(append_basis_rotation(c, "Z" * n), cfg.shots, cfg.noise, seed, "Z" * n)
        dist, frac = _process(counts, cfg, words, confusion)
        return fidelity_p0(dist, reg), frac

    if cfg.kind == "sm-squeeze-2exc":
        # X/Y outcomes of single qubits are not codewords, so the qubit-level
        # tomogram is not post-selected; the Z-basis codeword weight is reported
        bases, frac = {}, 1.0
        for k, axes in enumerate(itertools.product("XYZ", repeat=n)):
            basis = "".join(axes)
            counts = execute(append_basis_rotation(c, basis), cfg.shots, cfg.noise, seed * 1000 + k, basis)
            dist = mitigate(counts, confusion) if confusion is not None else normalize(counts)
            bases[basis] = dist
            if basis == "Z" * n:
                frac = post_select(dist, words)[1]
        return fidelity_sm_tomographic(TomogramSet(bases, "qubit"), exp.scale * epsilon), frac

    bases, retained = {}, {}
    for k, axes in enumerate(itertools.product("XYZ", repeat=reg.n_modes)):
        basis = "".join(axes)
        circ = append_mode_basis_rotation(c, reg, basis)
        counts = execute(circ, cfg.shots, cfg.noise, seed * 1000 + k, basis)
        bases[basis], retained[basis] = _process(counts, cfg, words, confusion)
    tomo = TomogramSet(bases, "mode", retained)
    return fidelity_bs_tomographic(tomo, exp.scale * epsilon), tomo.mean_retained()


def run_experiment(cfg: ExperimentConfig) -> list[ResultRow]:
    """One row per (epsilon, steps), in that order; row i uses seed ``cfg.seed + i``."""
    cfg.validate()
    rows = []
    for i, (eps, steps) in enumerate(itertools.product(cfg.epsilons, cfg.steps)):
        seed = cfg.seed + i
        c = build_circuit(cfg, eps, steps)
        counts = gate_counts(c)
        try:
            f, frac = _fidelity(cfg, c, eps, seed)
            f = min(max(f, 0.0), 1.0)
        except DegenerateResultError as exc:
            log.warning("eps=%g steps=%d: %s", eps, steps, exc)
            f, frac = float("nan"), 0.0
        rows.append(
            ResultRow(
                cfg.kind, eps, steps, cfg.scheme, cfg.noise.name, cfg.shots, seed, f,
                cfg.fidelity, frac, counts.cnot, counts.single_qubit,
            )
        )
    return rows


def emit_csv(rows: Sequence[ResultRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([
            r.kind, repr(float(r.epsilon)), r.steps, r.scheme, r.noise, r.shots, r.seed,
            f"{r.fidelity:.6f}", r.fidelity_method, f"{r.retained_fraction:.6f}",
            r.cnot_count, r.single_qubit_count,
        ])
    return buf.getvalue()


def emit_dat(rows: Sequence[ResultRow]) -> str:
    """Whitespace-separated mirror for gnuplot."""
    lines = ["# epsilon steps fidelity retained_fraction cnot single_qubit"]
    lines += [
        f"{r.epsilon!r} {r.steps} {r.fidelity:.6f} {r.retained_fraction:.6f} {r.cnot_count} {r.single_qubit_count}"
        for r in rows
    ]
    return "\n".join(lines) + "\n"


# --- config parsing -----------------------------------------------------------------------------

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def parse_number(text: str) -> float:
    """Float literal or simple arithmetic over ``pi``, e.g. ``pi/36`` or ``4*pi``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        raise ConfigError(f"cannot parse number {text!r}")

    try:
        return ev(ast.parse(text.strip(), mode="eval"))
    except SyntaxError:
        raise ConfigError(f"cannot parse number {text!r}") from None


def parse_steps(text: str) -> tuple[int, ...]:
    """Comma list with optional inclusive ranges: ``1, 2, 5-8``."""
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        lo, sep, hi = tok.partition("-")
        try:
            out.extend(range(int(lo), int(hi) + 1) if sep else [int(tok)])
        except ValueError:
            raise ConfigError(f"cannot parse steps {text!r}") from None
        if sep and int(hi) < int(lo):
            raise ConfigError(f"empty steps range {tok!r}")
    return tuple(out)


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _parse_int(text: str, key: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {text!r}") from None


def parse_config_text(text: str) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected key = value")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _noise_from(settings: dict[str, str]) -> NoiseModel:
    name = settings.get("noise", "ideal")
    custom = {k: settings[k] for k in ("p1", "p2", "readout", "p_barrier") if k in settings}
    try:
        if name != "custom":
            base = NoiseModel.preset(name)
            if not custom:
                return base
        else:
            base = NoiseModel(name="custom")
        flip = parse_number(custom["readout"]) if "readout" in custom else None
        return replace(
            base,
            p1=parse_number(custom.get("p1", repr(base.p1))),
            p2=parse_number(custom.get("p2", repr(base.p2))),
            p_barrier=parse_number(custom.get("p_barrier", repr(base.p_barrier))),
            readout_default=(flip, flip) if flip is not None else base.readout_default,
            name=name if name == "custom" else f"{name}+custom",
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


KNOWN_KEYS = {
    "kind", "epsilon", "scheme", "steps", "noise", "p1", "p2", "readout", "p_barrier", "shots",
    "seed", "fidelity", "post_select", "mitigate", "opt_level", "barriers",
}


def config_from_settings(settings: dict[str, str]) -> ExperimentConfig:
    unknown = set(settings) - KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    d = ExperimentConfig()
    cfg = ExperimentConfig(
        kind=settings.get("kind", d.kind),
        epsilons=tuple(parse_number(t) for t in settings["epsilon"].split(",")) if "epsilon" in settings else d.epsilons,
        scheme=settings.get("scheme", d.scheme),
        steps=parse_steps(settings["steps"]) if "steps" in settings else d.steps,
        noise=_noise_from(settings),
        shots=_parse_int(settings["shots"], "shots") if "shots" in settings else d.shots,
        seed=_parse_int(settings["seed"], "seed") if "seed" in settings else d.seed,
        fidelity=settings.get("fidelity", d.fidelity),
        post_select=_parse_bool(settings["post_select"]) if "post_select" in settings else d.post_select,
        mitigate=_parse_bool(settings["mitigate"]) if "mitigate" in settings else d.mitigate,
        opt_level=_parse_int(settings["opt_level"], "opt_level") if "opt_level" in settings else d.opt_level,
        insert_barriers=_parse_bool(settings["barriers"]) if "barriers" in settings else d.insert_barriers,
    )
    cfg.validate()
    return cfg


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bosonq", description="Simulate digitized bosonic interactions and report fidelities.")
    p.add_argument("config", nargs="?", help="key = value config file")
    p.add_argument("--kind", choices=KINDS)
    p.add_argument("--epsilon", help="comma list, e.g. 0.05,pi/36")
    p.add_argument("--scheme", choices=TrotterScheme.KINDS)
    p.add_argument("--steps", help="comma list with ranges, e.g. 1-10")
    p.add_argument("--noise", help=f"preset ({', '.join(sorted(PRESETS))}) or custom")
    p.add_argument("--shots", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--fidelity", choices=FIDELITY_METHODS)
    p.add_argument("--post-select", dest="post_select", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--mitigate", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--opt-level", dest="opt_level", type=int, choices=(0, 1, 2))
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.add_argument("--dat", help="optional gnuplot .dat mirror")
    p.add_argument("--dump-qasm", dest="dump_qasm", help="write the compiled circuit(s) as OpenQASM")
    return p


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    settings: dict[str, str] = {}
    if args.config:
        try:
            settings = parse_config_text(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    for key in ("kind", "epsilon", "scheme", "steps", "noise", "shots", "seed", "fidelity", "opt_level"):
        v = getattr(args, key)
        if v is not None:
            settings[key] = str(v)
    for key in ("post_select", "mitigate"):
        v = getattr(args, key)
        if v is not None:
            settings[key] = "true" if v else "false"
    return config_from_settings(settings)


def _qasm_paths(base: str, n: int) -> list[Path]:
    p = Path(base)
    if n == 1:
        return [p]
    return [p.with_name(f"{p.stem}_{i}{p.suffix or '.qasm'}") for i in range(n)]


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        rows = run_experiment(cfg)
        if args.dump_qasm:
            pairs = list(itertools.product(cfg.epsilons, cfg.steps))
            for path, (eps, steps) in zip(_qasm_paths(args.dump_qasm, len(pairs)), pairs):
                path.write_text(to_qasm(build_circuit(cfg, eps, steps)))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BackendCapError as exc:
        print(f"backend cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    text = emit_csv(rows)
    if args.out:
        Path(args.out).write_text(text, newline="")
    else:
        sys.stdout.write(text)
    if args.dat:
        Path(args.dat).write_text(emit_dat(rows))
    return EXIT_OK
