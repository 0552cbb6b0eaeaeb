"""Configuration-driven pipelines: metrics table, Bell curves, Stokes textures.

Runs are reproducible: one root seed is split deterministically per subspace
and stage, every artifact is a plain text file, and a manifest with config
echo and checksums is written per run.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import circuit, measurement, tomography, topology
from .source import OAMSpectrum, spdc_spectrum

DEFAULT_SUBSPACES = ((1, 0), (-1, 0), (2, 0), (-2, 0), (3, 0), (-3, 0),
                     (1, -1), (2, 1), (-3, 1), (3, -1), (-3, 2), (3, -2))
_STAGE = {"tomo": 1, "bell": 2, "texture": 3, "mle": 4}
OUT_ENV_VAR = "SKYRMLAB_OUT"


@dataclass(frozen=True)
class ExperimentConfig:
    subspaces: tuple = DEFAULT_SUBSPACES
    spectrum_model: str = "exponential"
    spectrum_l0: float = 2.0
    spectrum_L: int = 6
    spectrum_coefficients: tuple | None = None
    eta0: float = 1.0
    noise_kind: str = "none"
    noise_p: float = 1.0
    accidental: float = 0.0
    chi: float = 0.0
    extra_phase: float = 0.0
    hwp1: str = "balanced"
    n0: float = 10000.0
    seed: int = 42
    exact: bool = False
    grid_n: int = 512
    grid_extent: float = 6.0
    waist: float = 1.0
    theta_a_list: tuple = (0.0, math.pi / 2, math.pi, 3 * math.pi / 2)
    theta_b_points: int = 36
    chsh_angles: tuple = measurement.DEFAULT_CHSH_ANGLES
    rotation: str = "none"
    out_dir: str = ""
    jobs: int = 0

    def validate(self):
        for l1, l2 in self.subspaces:
            if l1 == l2:
                raise ValueError(f"subspace ({l1},{l2}) has ell1 == ell2")
            if max(abs(l1), abs(l2)) > self.spectrum_L:
                raise ValueError(f"subspace ({l1},{l2}) exceeds spectrum cutoff L={self.spectrum_L}")
        if self.n0 < 1:
            raise ValueError("n0 must be >= 1")
        if self.grid_n < 64:
            raise ValueError("grid n must be >= 64")
        if self.theta_b_points < 2:
            raise ValueError("need at least 2 theta_B points")
        if self.hwp1 != "balanced":
            float(self.hwp1)

    def spectrum(self) -> OAMSpectrum:
        return spdc_spectrum(self.spectrum_model, self.spectrum_L, l0=self.spectrum_l0,
                             coefficients=self.spectrum_coefficients)

    def noise(self) -> circuit.NoiseChannel:
        if self.noise_kind == "background":
            return circuit.NoiseChannel.background(self.accidental)
        return circuit.NoiseChannel(self.noise_kind, p=self.noise_p)

    def state_spec(self, l1: int, l2: int) -> circuit.HybridStateSpec:
        if self.hwp1 == "balanced":
            angle = circuit.balance_hwp1(self.spectrum(), l1, l2)
        else:
            angle = float(self.hwp1)
        return circuit.HybridStateSpec(ell1=l1, ell2=l2, chi=self.chi,
                                       hwp1_angle=angle, extra_phase=self.extra_phase)

    def grid(self) -> topology.GridSpec:
        return topology.GridSpec(n=self.grid_n, extent=self.grid_extent)

    def rotation_matrix(self) -> np.ndarray | None:
        if self.rotation == "none":
            return None
        kind, _, value = self.rotation.partition(":")
        theta = float(value)
        if kind == "hwp":
            return circuit.hwp_jones(theta)
        if kind == "qwp":
            return circuit.qwp_jones(theta)
        raise ValueError(f"unknown rotation {self.rotation!r}")

    def echo(self) -> str:
        rows = []
        for key in sorted(self.__dataclass_fields__):
            value = getattr(self, key)
            if key == "subspaces":
                value = "; ".join(f"{a},{b}" for a, b in value)
            elif isinstance(value, tuple):
                value = ", ".join(f"{v:.17g}" for v in value)
            elif isinstance(value, float):
                value = f"{value:.17g}"
            rows.append(f"{key} = {value}")
        return "\n".join(rows) + "\n"


def child_seed(root: int, subspace_index: int, stage: str) -> int:
    ss = np.random.SeedSequence((int(root), int(subspace_index), _STAGE[stage]))
    return int(ss.generate_state(1)[0])


def _parse_pairs(text: str) -> tuple:
    pairs = []
    for chunk in text.replace("\n", ";").split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        a, b = chunk.split(",")
        pairs.append((int(a), int(b)))
    return tuple(pairs)


def load_config(path: str) -> ExperimentConfig:
    """Read an INI-style config file; missing keys keep their defaults."""
    parser = configparser.ConfigParser()
    with open(path, "r", encoding="utf-8") as fh:
        parser.read_file(fh)
    cfg = ExperimentConfig()
    updates: dict = {}

    def grab(section, key, cast, name=None):
        if parser.has_option(section, key):
            raw = parser.get(section, key)
            updates[name or key] = cast(raw)

    grab("run", "seed", int)
    grab("run", "n0", float)
    grab("run", "out", str, "out_dir")
    grab("run", "jobs", int)
    if parser.has_option("run", "sampling"):
        updates["exact"] = parser.get("run", "sampling").strip() == "exact"
    grab("subspaces", "pairs", _parse_pairs, "subspaces")
    grab("spectrum", "model", str, "spectrum_model")
    grab("spectrum", "l0", float, "spectrum_l0")
    grab("spectrum", "L", int, "spectrum_L")
    if parser.has_option("spectrum", "coefficients"):
        updates["spectrum_coefficients"] = tuple(
            float(v) for v in parser.get("spectrum", "coefficients").split(","))
    grab("spectrum", "eta0", float, "eta0")
    grab("noise", "kind", str, "noise_kind")
    grab("noise", "p", float, "noise_p")
    grab("noise", "accidental", float)
    grab("phases", "chi", float)
    grab("phases", "extra", float, "extra_phase")
    grab("gate", "hwp1", str)
    grab("grid", "n", int, "grid_n")
    grab("grid", "extent", float, "grid_extent")
    grab("grid", "waist", float)
    if parser.has_option("bell", "theta_a"):
        updates["theta_a_list"] = tuple(
            float(v) for v in parser.get("bell", "theta_a").split(","))
    grab("bell", "theta_b_points", int)
    if parser.has_option("bell", "angles"):
        updates["chsh_angles"] = tuple(
            float(v) for v in parser.get("bell", "angles").split(","))
    grab("rotation", "kind", str, "rotation")
    return replace(cfg, **updates)


def _subspace_tag(l1: int, l2: int) -> str:
    return f"{l1}_{l2}"


def _write(path: str, text: str) -> str:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return path


def _build_rho(config: ExperimentConfig, l1: int, l2: int):
    spec = config.state_spec(l1, l2)
    rho = circuit.make_hybrid_density(spec, config.spectrum(), config.noise(),
                                      eta0=config.eta0)
    return spec, rho


def _table_worker(args):
    config, index, l1, l2 = args
    files: list = []
    try:
        spec, rho = _build_rho(config, l1, l2)
        counts = tomography.simulate_tomography(
            rho, config.n0, seed=child_seed(config.seed, index, "tomo"),
            exact=config.exact, accidental=config.accidental)
        result = tomography.mle_reconstruct(
            counts, target=circuit.ideal_hybrid_density(),
            seed=child_seed(config.seed, index, "mle"))
        fld = topology.stokes_field(result.rho_hat, spec, config.waist, config.grid())
        n_meas = topology.skyrmion_number(fld)
        pred = topology.predict_topology(l1, l2)
        row = (f"{l1}\t{l2}\t{result.fidelity:.6f}\t{result.purity:.6f}\t"
               f"{result.concurrence:.6f}\t{pred.n}\t{n_meas:.6f}\t")
        return index, row, files, None
    except Exception as exc:  # recorded in-row, run continues
        row = f"{l1}\t{l2}\t\t\t\t\t\t{type(exc).__name__}: {exc}"
        return index, row, files, f"({l1},{l2}): {exc}"


def _bell_worker(args):
    config, index, l1, l2 = args
    files: list = []
    try:
        _, rho = _build_rho(config, l1, l2)
        tag = _subspace_tag(l1, l2)
        theta_b = np.linspace(0.0, 2 * math.pi, config.theta_b_points, endpoint=False)
        curve = measurement.coincidence_curve(
            rho, config.theta_a_list, theta_b, config.n0,
            seed=child_seed(config.seed, index, "bell"),
            accidental=config.accidental, exact=config.exact)
        files.append(_write(os.path.join(config.out_dir, f"bell_{tag}_curve.txt"),
                            curve.to_text()))
        vis = measurement.visibility(curve)
        a, ap, b, bp = config.chsh_angles
        chsh_table = measurement.coincidence_curve(
            rho, [a, ap, a + math.pi, ap + math.pi], [b, bp, b + math.pi, bp + math.pi],
            config.n0, seed=child_seed(config.seed, index, "bell"),
            accidental=config.accidental, exact=config.exact)
        files.append(_write(os.path.join(config.out_dir, f"bell_{tag}_chsh.txt"),
                            chsh_table.to_text()))
        s_value, s_err = measurement.chsh_from_counts(chsh_table, config.chsh_angles)
        row = f"{l1}\t{l2}\t{vis:.6f}\t{s_value:.6f}\t{s_err:.6f}\t"
        return index, row, files, None
    except Exception as exc:
        row = f"{l1}\t{l2}\t\t\t\t{type(exc).__name__}: {exc}"
        return index, row, files, f"({l1},{l2}): {exc}"


def _texture_worker(args):
    config, index, l1, l2 = args
    files: list = []
    try:
        spec, rho = _build_rho(config, l1, l2)
        rot = config.rotation_matrix()
        if rot is not None:
            rho = topology.basis_rotation(rho, rot)
        tag = _subspace_tag(l1, l2)
        fld = topology.stokes_field(rho, spec, config.waist, config.grid())
        report = topology.topology_report(fld)
        files.append(_write(os.path.join(config.out_dir, f"texture_{tag}_field.txt"),
                            topology.field_to_text(fld)))
        for name, grid_vals in topology.stokes_phases(fld).items():
            files.append(_write(
                os.path.join(config.out_dir, f"texture_{tag}_{name}.txt"),
                topology.phase_grid_to_text(fld, grid_vals, name)))
        files.append(_write(os.path.join(config.out_dir, f"texture_{tag}_report.txt"),
                            report.to_text()))
        row = (f"{l1}\t{l2}\t{report.skyrmion_number:.6f}\t{report.skyrmion_number_raw:.6f}\t"
               f"{report.predicted_n}\t{report.polarity}\t{report.vorticity}\t")
        return index, row, files, None
    except Exception as exc:
        row = f"{l1}\t{l2}\t\t\t\t\t\t{type(exc).__name__}: {exc}"
        return index, row, files, f"({l1},{l2}): {exc}"


def _run_workers(config: ExperimentConfig, worker, header: str, table_name: str):
    os.makedirs(config.out_dir, exist_ok=True)
    jobs = config.jobs if config.jobs > 0 else (os.cpu_count() or 1)
    jobs = max(1, min(jobs, len(config.subspaces) or 1))
    tasks = [(config, i, l1, l2) for i, (l1, l2) in enumerate(config.subspaces)]
    if jobs == 1 or len(tasks) <= 1:
        outcomes = [worker(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(worker, tasks))
    outcomes.sort(key=lambda o: o[0])
    rows = [header] + [o[1] for o in outcomes]
    files = [f for o in outcomes for f in o[2]]
    failures = [o[3] for o in outcomes if o[3] is not None]
    files.append(_write(os.path.join(config.out_dir, table_name), "\n".join(rows) + "\n"))
    _write_manifest(config, files)
    for line in rows:
        print(line)
    for failure in failures:
        print(f"FAILED {failure}", file=sys.stderr)
    return 0 if not failures else 1


def _write_manifest(config: ExperimentConfig, files: list):
    lines = ["[config]", config.echo().rstrip("\n"), "", "[artifacts]"]
    for path in sorted(files):
        with open(path, "rb") as fh:
            digest = hashlib.sha256(fh.read()).hexdigest()
        lines.append(f"{digest}  {os.path.basename(path)}")
    _write(os.path.join(config.out_dir, "manifest.txt"), "\n".join(lines) + "\n")


def run_table(config: ExperimentConfig) -> int:
    config.validate()
    return _run_workers(config, _table_worker,
                        "ell1\tell2\tfidelity\tpurity\tconcurrence\tN_predicted\tN_measured\terror",
                        "table.tsv")


def run_bell(config: ExperimentConfig) -> int:
    config.validate()
    return _run_workers(config, _bell_worker,
                        "ell1\tell2\tvisibility\tS\tsigma_S\terror", "bell_summary.tsv")


def run_texture(config: ExperimentConfig) -> int:
    config.validate()
    return _run_workers(config, _texture_worker,
                        "ell1\tell2\tN\tN_raw\tN_predicted\tpolarity\tvorticity\terror",
                        "texture_summary.tsv")


def run_tomo(counts_path: str, out_dir: str, target_chi: float | None) -> int:
    table = measurement.CountTable.load(counts_path)
    target = None if target_chi is None else circuit.ideal_hybrid_density(target_chi)
    result = tomography.mle_reconstruct(table, target=target)
    report = tomography.format_report(result)
    print(report, end="")
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        files = [
            _write(os.path.join(out_dir, "tomo_report.txt"), report),
            _write(os.path.join(out_dir, "tomo_rho.txt"), tomography.rho_to_text(result.rho_hat)),
        ]
        lines = ["[artifacts]"]
        for path in sorted(files):
            with open(path, "rb") as fh:
                lines.append(f"{hashlib.sha256(fh.read()).hexdigest()}  {os.path.basename(path)}")
        _write(os.path.join(out_dir, "tomo_manifest.txt"), "\n".join(lines) + "\n")
    return 0


def _add_common_flags(sub):
    sub.add_argument("--config", help="INI config file")
    sub.add_argument("--seed", type=int, help="root seed")
    sub.add_argument("--out", help=f"output directory (default ${OUT_ENV_VAR} or ./skyrmlab_out)")
    sub.add_argument("--subspace", action="append", metavar="L1,L2",
                     help="subspace pair, repeatable")
    sub.add_argument("--noise", metavar="KIND:P", help="none | isotropic:P | dephasing:P | background:RATE")
    sub.add_argument("--grid", metavar="N:EXTENT", help="grid points and half-extent in waists")
    sub.add_argument("--n0", type=float, help="count scale")
    sub.add_argument("--jobs", type=int, help="parallel workers")
    sub.add_argument("--exact", action="store_true", help="expected counts instead of Poisson draws")


def _config_from_args(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    updates: dict = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.out:
        updates["out_dir"] = args.out
    if args.subspace:
        updates["subspaces"] = _parse_pairs(";".join(args.subspace))
    if args.noise:
        kind, _, value = args.noise.partition(":")
        updates["noise_kind"] = kind
        if kind == "background":
            updates["accidental"] = float(value or 0.0)
        elif value:
            updates["noise_p"] = float(value)
    if args.grid:
        n, _, extent = args.grid.partition(":")
        updates["grid_n"] = int(n)
        if extent:
            updates["grid_extent"] = float(extent)
    if args.n0 is not None:
        updates["n0"] = args.n0
    if args.jobs is not None:
        updates["jobs"] = args.jobs
    if args.exact:
        updates["exact"] = True
    cfg = replace(cfg, **updates)
    if not cfg.out_dir:
        cfg = replace(cfg, out_dir=os.environ.get(OUT_ENV_VAR, "skyrmlab_out"))
    return cfg


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="skyrmlab",
        description="Digital twin of a reconfigurable hybrid-entanglement photonic circuit.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("table", "metrics table: tomography, MLE, topology per subspace"),
                            ("bell", "coincidence curves, visibility and CHSH per subspace"),
                            ("texture", "Stokes field, Stokes phases and skyrmion numbers")):
        p = sub.add_parser(name, help=help_text)
        _add_common_flags(p)
    tomo = sub.add_parser("tomo", help="reconstruct a state from a saved count table")
    tomo.add_argument("counts_file")
    tomo.add_argument("--out", default="", help="optional output directory")
    tomo.add_argument("--target-chi", type=float, default=None,
                      help="report fidelity against the ideal state with this phase")
    args = parser.parse_args(argv)
    if args.command == "tomo":
        return run_tomo(args.counts_file, args.out, args.target_chi)
    config = _config_from_args(args)
    if args.command == "table":
        return run_table(config)
    if args.command == "bell":
        return run_bell(config)
    return run_texture(config)


if __name__ == "__main__":
    raise SystemExit(main())
