"""Command line interface: every experiment writes a reproducible CSV.

Each CSV starts with ``#`` comment lines carrying the tool version, a hash
of the full configuration (arguments plus numerical thresholds), the RNG
seed and every threshold. Floats are written with ``repr``, the shortest
string that round-trips, so identical flags give byte-identical files.

Exit codes: 0 success, 2 configuration error, 3 numerical failure (which
includes a failed PCF check).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, config
from . import density as dens
from . import ergodic as erg
from . import orbifold as orb
from . import ratmap as rm
from . import snowcomb as sc
from ._backend import BACKEND
from .polyroots import NoConvergence
from .sphere import RngStream, normalize

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

DEFAULT_TABLE_MAPS = ("rhat", "rhat_sym", "lattes_2222")


class ConfigError(ValueError):
    pass


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


class Report:
    """CSV with a provenance header, written in one piece at the end."""

    def __init__(self, command: str, args: argparse.Namespace, columns: Sequence[str]):
        self.command = command
        self.args = args
        self.columns = list(columns)
        self.rows: list[list[str]] = []
        self.notes: list[str] = []

    def add(self, *values):
        if len(values) != len(self.columns):
            raise AssertionError(f"row has {len(values)} fields, header {len(self.columns)}")
        self.rows.append([_fmt(v) for v in values])

    def note(self, text: str):
        self.notes.append(text)

    def render(self) -> str:
        settings = {
            k: v for k, v in sorted(vars(self.args).items())
            if k not in ("out", "detail", "func", "summary")
        }
        thresholds = config.as_dict()
        blob = json.dumps({"args": settings, "config": thresholds}, sort_keys=True, default=str)
        digest = hashlib.sha256(blob.encode()).hexdigest()[:16]
        buf = io.StringIO()
        buf.write(f"# snowdyn {__version__} command={self.command}\n")
        buf.write(f"# config_hash={digest}\n")
        rng = getattr(self.args, "rng", None)
        buf.write(f"# rng=philox4x64 seed={rng if rng is not None else 'none'}\n")
        buf.write("# args " + " ".join(f"{k}={_fmt(v)}" for k, v in settings.items()) + "\n")
        buf.write("# thresholds " + " ".join(f"{k}={_fmt(v)}" for k, v in sorted(thresholds.items())) + "\n")
        for n in self.notes:
            buf.write(f"# {n}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        w.writerows(self.rows)
        return buf.getvalue()

    def write(self, path: str | None):
        text = self.render()
        if path in (None, "-"):
            sys.stdout.write(text)
        else:
            Path(path).write_text(text)


def _map(source: str) -> rm.RationalMap:
    try:
        return rm.load_map(source)
    except (rm.UnknownName, FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
        raise ConfigError(f"cannot load map {source!r}: {exc}") from exc


def _expansion(rmap: rm.RationalMap, given: int | None) -> int:
    if given is not None:
        if given < 2:
            raise ConfigError("--expansion must be at least 2")
        return given
    N = rmap.provenance.get("expansion")
    if N is None:
        root = math.isqrt(rmap.degree)
        if root * root != rmap.degree:
            raise ConfigError(f"{rmap.label}: degree {rmap.degree} is not a square; pass --expansion")
        N = root
    return int(N)


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

LYAPUNOV_COLUMNS = (
    "map", "N", "seeds", "n", "rng", "mean_dim", "max_dim", "min_dim", "std_dim",
    "mean_chi", "alpha", "hausdorff_dim", "jensen_gap",
)


def cmd_lyapunov(args) -> int:
    rmap = _map(args.map)
    N = _expansion(rmap, args.expansion)
    rep = erg.dimension_experiment(
        rmap, N, args.seeds, args.n, RngStream(args.rng), workers=args.workers
    )
    out = Report("lyapunov", args, LYAPUNOV_COLUMNS)
    out.note(f"excluded_seeds={len(rep.excluded)} perturbations={rep.perturbations}")
    out.add(
        rmap.label, N, args.seeds, args.n, args.rng, rep.mean_dim, rep.max_dim,
        rep.min_dim, rep.std_dim, rep.mean_chi, rep.alpha, rep.hausdorff_dim, rep.jensen_gap,
    )
    out.write(args.out)
    if args.detail:
        det = Report("lyapunov-detail", args, ("seed", "re", "im", "chi", "dim_mu"))
        for i, (p, c) in enumerate(zip(rep.seed_points, rep.chis)):
            z = p.to_complex()
            det.add(i, z.real, z.imag, c, erg.dim_mu(c, N))
        det.write(args.detail)
    return EXIT_OK


TABLE1_COLUMNS = (
    "map", "status", "degree", "N", "hausdorff_dim", "mean_dim", "max_dim", "min_dim",
    "std_dim", "mean_chi", "alpha", "jensen_gap",
)


def cmd_table1(args) -> int:
    out = Report("table1", args, TABLE1_COLUMNS)
    failed = False
    for name in args.maps.split(","):
        name = name.strip()
        try:
            rmap = _map(name)
            N = _expansion(rmap, None)
        except ConfigError as exc:
            out.add(name, f"config error: {exc}", *[""] * (len(TABLE1_COLUMNS) - 2))
            failed = True
            continue
        try:
            rep = erg.dimension_experiment(
                rmap, N, args.seeds, args.n, RngStream(args.rng), workers=args.workers
            )
        except (erg.ExperimentFailed, NoConvergence, ArithmeticError) as exc:
            out.add(name, f"numerical failure: {exc}", rmap.degree, N,
                    erg.hausdorff_dimension(rmap.degree, N), *[""] * 7)
            failed = True
            continue
        out.add(
            name, "ok", rmap.degree, N, rep.hausdorff_dim, rep.mean_dim, rep.max_dim,
            rep.min_dim, rep.std_dim, rep.mean_chi, rep.alpha, rep.jensen_gap,
        )
    out.write(args.out)
    return EXIT_NUMERIC if failed and args.strict else EXIT_OK


def cmd_classify(args) -> int:
    rmap = _map(args.map)
    port = rm.portrait(rmap, snap_tol=args.tol)
    sig = orb.signature(port)
    chi = orb.euler_characteristic(sig)
    out = Report("classify", args, ("map", "signature", "euler_char_num", "euler_char_den", "class"))
    nu = orb.ramification_function(port)
    md = orb.maxdeg_table(port)
    out.note(
        "ramification " + " ".join(
            f"{rm.point_label(port.points[p])}:nu={nu[p]},maxdeg={md[p]}" for p in port.postcritical
        )
    )
    out.add(rmap.label, str(sig), chi.numerator, chi.denominator, orb.classify(sig))
    out.write(args.out)
    return EXIT_OK


def cmd_pcf_check(args) -> int:
    rmap = _map(args.map)
    tol = args.tol if args.tol is not None else rmap.provenance.get("snap_tol", config.SNAP_TOL_EXACT)
    if args.post:
        post = [rm.parse_point(t) for t in args.post.split(",")]
    elif "expected_post" in rmap.provenance:
        post = rmap.provenance["expected_post"]
    else:
        raise ConfigError(f"{rmap.label}: no expected postcritical set; pass --post")
    rep = rm.verify_pcf(rmap, post, tol)
    out = Report(
        "pcf-check", args,
        ("map", "critical_point", "critical_value", "nearest_post", "distance", "within_tol"),
    )
    out.note(
        f"result={'pass' if rep.passed else 'fail'} tol={tol!r} max_deviation={rep.max_deviation!r} "
        f"invariance_deviation={rep.invariance_deviation!r} riemann_hurwitz={rep.riemann_hurwitz} "
        f"critical_cycle={'true' if rep.has_critical_periodic_orbit else 'false'}"
    )
    for c, v, t, d in rep.distances:
        out.add(rmap.label, rm.point_label(c, 10), rm.point_label(v, 10), rm.point_label(t), d, d < tol)
    out.write(args.out)
    return EXIT_OK if rep.passed else EXIT_NUMERIC


def cmd_density(args) -> int:
    rmap = _map(args.map)
    cap = dens.j_cap(rmap)
    if not 0 <= args.level <= cap:
        raise ConfigError(f"--level must lie in [0, {cap}] for degree {rmap.degree}")
    if args.grid < 1:
        raise ConfigError("--grid must be positive")
    h = 2 * args.extent / args.grid
    axis = -args.extent + h * (np.arange(args.grid) + 0.5)
    zs = [complex(x, y) for y in axis for x in axis]
    pairs = np.array([normalize(z, 1.0).pair() for z in zs], dtype=np.complex128)
    keep = dens.postcritical_distance(rmap, pairs) > args.exclusion
    field = dens.kappa_field(rmap, pairs[keep], args.level)
    out = Report("density", args, ("re", "im", "kappa", "fiber_count"))
    out.note(f"excluded_points={int((~keep).sum())} exclusion={args.exclusion!r}")
    for z, k, c in zip(np.array(zs)[keep], field.kappa, field.fiber_count):
        out.add(z.real, z.imag, k, int(c))
    out.write(args.out)
    return EXIT_OK


def cmd_blowup(args) -> int:
    rmap = _map(args.map)
    radii = _floats(args.radii)
    try:
        fit = dens.blowup_fit(rmap, rm.parse_point(args.point), args.level, radii, args.directions)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = Report("blowup", args, ("map", "point", "level", "radius", "kappa", "slope", "predicted", "maxdeg"))
    for r, k in zip(fit.radii, fit.kappa):
        out.add(rmap.label, rm.point_label(fit.point), args.level, r, k, fit.slope, fit.predicted, fit.maxdeg)
    out.write(args.out)
    return EXIT_OK


def _read_pairs(path: str) -> list[tuple[sc.PointAddress, sc.PointAddress]]:
    pairs = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#")[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise ConfigError(f"{path}:{lineno}: expected two addresses, got {line!r}")
        try:
            pairs.append((sc.PointAddress.parse(parts[0]), sc.PointAddress.parse(parts[1])))
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad address: {exc}") from exc
    return pairs


def cmd_snow(args) -> int:
    try:
        spec = sc.load_generator_spec(args.generator)
    except FileNotFoundError as exc:
        raise ConfigError(str(exc)) from exc
    gen = sc.build_generator(spec)
    level = sc.default_levels(gen) if args.level is None else args.level
    cx = sc.subdivide(gen, level, base=args.base)
    summary = Report("snow", args, ("level", "cylinders", "annulus_min", "hausdorff_dim"))
    summary.note(
        f"generator={spec.name} N={gen.N} M={gen.M} embeddable={'true' if gen.embeddable else 'false'}"
    )
    for j in range(level + 1):
        amin = sc.annulus_crossing_min(cx, j) if j < level else ""
        summary.add(j, cx.count(j), amin, sc.snowsphere_hausdorff_dim(gen))
    if args.pairs is None:
        summary.write(args.out)
        return EXIT_OK
    pairs = _read_pairs(args.pairs)
    chains = Report("snow", args, ("x", "y", "level", "d_j", "shifted"))
    for x, y in pairs:
        for a in (x, y):
            if a.depth < level:
                raise ConfigError(f"address {a} is shorter than level {level}")
            try:
                cx.index(a, level)
            except ValueError as exc:
                raise ConfigError(f"address {a}: {exc}") from exc
        probe = sc.metric_probe(cx, x, y, level)
        for j, (d, s) in enumerate(zip(probe.distances, probe.shifted)):
            chains.add(str(x.prefix(level)), str(y.prefix(level)), j, d, s)
    chains.write(args.out)
    if args.summary:
        summary.write(args.summary)
    return EXIT_OK


def cmd_holder_probe(args) -> int:
    rmap = _map(args.map)
    N = _expansion(rmap, args.expansion)
    chi = args.chi
    if chi is None:
        rep = erg.dimension_experiment(rmap, N, args.chi_seeds, args.chi_n, RngStream(args.rng, 1))
        chi = rep.mean_chi
    try:
        table = erg.holder_probe(rmap, N, chi, args.samples, _floats(args.radii), RngStream(args.rng))
    except erg.NotRealPostcritical as exc:
        raise ConfigError(str(exc)) from exc
    out = Report("holder-probe", args, ("map", "radius", "median_ratio", "q25", "q75", "used", "excluded", "alpha"))
    out.note(f"chi={chi!r}")
    for r in table.rows:
        out.add(rmap.label, r.radius, r.median_ratio, r.q25, r.q75, r.used, r.excluded, table.alpha)
    out.write(args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="snowdyn",
        description="Experiments on snowsphere maps; every command writes CSV.",
    )
    p.add_argument("--version", action="version", version=f"snowdyn {__version__} ({BACKEND} kernels)")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, rng=True):
        sp.add_argument("--out", default=None, help="output CSV (default stdout)")
        if rng:
            sp.add_argument("--rng", type=int, default=42, help="RNG seed")

    s = sub.add_parser("lyapunov", help="Birkhoff estimate of chi and dim mu over many seeds")
    s.add_argument("--map", required=True, help="catalog name or map JSON file")
    s.add_argument("--n", type=int, default=10_000)
    s.add_argument("--seeds", type=int, default=100)
    s.add_argument("--expansion", type=int, default=None, help="N (default from the map)")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--detail", default=None, help="per-seed CSV")
    common(s)
    s.set_defaults(func=cmd_lyapunov)

    s = sub.add_parser("table1", help="dimension table over several maps")
    s.add_argument("--maps", default=",".join(DEFAULT_TABLE_MAPS))
    s.add_argument("--n", type=int, default=10_000)
    s.add_argument("--seeds", type=int, default=100)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--strict", action="store_true", help="exit 3 if any row failed")
    common(s)
    s.set_defaults(func=cmd_table1)

    s = sub.add_parser("classify", help="orbifold signature and class")
    s.add_argument("--map", required=True)
    s.add_argument("--tol", type=float, default=None, help="portrait snapping tolerance")
    common(s, rng=False)
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("pcf-check", help="critical values against an expected postcritical set")
    s.add_argument("--map", required=True)
    s.add_argument("--tol", type=float, default=None)
    s.add_argument("--post", default=None, help="comma-separated points, e.g. 1,-1,inf")
    common(s, rng=False)
    s.set_defaults(func=cmd_pcf_check)

    s = sub.add_parser("density", help="kappa_j on a grid in the plane")
    s.add_argument("--map", required=True)
    s.add_argument("--level", type=int, default=2)
    s.add_argument("--grid", type=int, default=64)
    s.add_argument("--extent", type=float, default=2.0, help="grid covers [-extent, extent]^2")
    s.add_argument("--exclusion", type=float, default=config.EXCLUSION_RADIUS)
    common(s, rng=False)
    s.set_defaults(func=cmd_density)

    s = sub.add_parser("blowup", help="blow-up exponent of kappa_j at a postcritical point")
    s.add_argument("--map", required=True)
    s.add_argument("--point", required=True, help="e.g. 1, -1, inf")
    s.add_argument("--level", type=int, default=2)
    s.add_argument("--radii", default="1e-3,3e-4,1e-4,3e-5,1e-5")
    s.add_argument("--directions", type=int, default=8)
    common(s, rng=False)
    s.set_defaults(func=cmd_blowup)

    s = sub.add_parser("snow", help="subdivision complex, annulus crossings and chain distances")
    s.add_argument("--generator", required=True, help="generator JSON file or bundled name")
    s.add_argument("--level", type=int, default=None)
    s.add_argument("--base", choices=("cube", "single-face"), default="cube")
    s.add_argument("--pairs", default=None, help="file of address pairs, one pair per line")
    s.add_argument("--summary", default=None, help="level table when --pairs is given")
    common(s, rng=False)
    s.set_defaults(func=cmd_snow)

    s = sub.add_parser("holder-probe", help="log snow distance over log chordal distance")
    s.add_argument("--map", required=True)
    s.add_argument("--samples", type=int, default=300)
    s.add_argument("--radii", default="1e-3,1e-5,1e-7,1e-9,1e-11,1e-13")
    s.add_argument("--expansion", type=int, default=None)
    s.add_argument("--chi", type=float, default=None, help="default: estimate from a short run")
    s.add_argument("--chi-seeds", type=int, default=20)
    s.add_argument("--chi-n", type=int, default=10_000)
    common(s)
    s.set_defaults(func=cmd_holder_probe)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, sc.ValidationFailure, sc.BudgetExceeded, rm.DegenerateMap) as exc:
        print(f"snowdyn {args.command}: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (
        NoConvergence,
        ArithmeticError,
        erg.ExperimentFailed,
        orb.Diverges,
        rm.NotFiniteWithinBudget,
        dens.TooClosePostcritical,
    ) as exc:
        print(f"snowdyn {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
