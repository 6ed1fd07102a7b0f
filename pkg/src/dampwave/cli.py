"""Command-line scenario runner.

    dampwave SUBCOMMAND CONFIG.json [--output DIR]

Subcommands: spectrum, beta, gaps, resolvent, simulate, predict, report.
Each run writes tab-separated tables and ``summary.txt`` into the configured
output directory. The directory is assembled in a temporary sibling and
renamed into place, so a failed run leaves nothing behind.

Exit status: 0 ok, 2 invalid configuration or precondition, 3 numerical
failure, 4 resource limit, 5 refused precondition.
"""

from __future__ import annotations

import argparse
import math
import shutil
import sys
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import damping as dmp
from . import gaps as gp
from . import predictor as pr
from . import resolvent as rs
from . import semigroup as sg
from . import spectral as sp
from .config import ConfigError, ScenarioConfig, load_config, xi_value
from .errors import DampwaveError, InvalidArgument, NumericalFailure, RefusedPrecondition, ResourceLimit

SUBCOMMANDS = ("spectrum", "beta", "gaps", "resolvent", "simulate", "predict", "report")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_RESOURCE, EXIT_REFUSED = 0, 2, 3, 4, 5


def exit_status(exc: BaseException) -> int:
    if isinstance(exc, InvalidArgument):
        return EXIT_CONFIG
    if isinstance(exc, NumericalFailure):
        return EXIT_NUMERICAL
    if isinstance(exc, ResourceLimit):
        return EXIT_RESOURCE
    if isinstance(exc, RefusedPrecondition):
        return EXIT_REFUSED
    return EXIT_NUMERICAL


# ---------------------------------------------------------------------------
# formatting
# ---------------------------------------------------------------------------


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer, Fraction)):
        return str(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.12g}"
    return str(v)


@dataclass
class Report:
    tables: dict = field(default_factory=dict)
    lines: list = field(default_factory=list)

    def table(self, name: str, header: tuple, rows) -> None:
        self.tables[name] = (header, [tuple(r) for r in rows])

    def say(self, key: str, value) -> None:
        self.lines.append(f"{key} = {fmt(value)}")

    def write(self, directory: Path) -> None:
        directory = Path(directory)
        directory.parent.mkdir(parents=True, exist_ok=True)
        tmp = Path(tempfile.mkdtemp(prefix=f".{directory.name}.", dir=directory.parent))
        try:
            for name, (header, rows) in sorted(self.tables.items()):
                with open(tmp / f"{name}.tsv", "w") as fh:
                    fh.write("\t".join(header) + "\n")
                    for r in rows:
                        fh.write("\t".join(fmt(v) for v in r) + "\n")
            (tmp / "summary.txt").write_text("\n".join(self.lines) + "\n")
            old = None
            if directory.exists():
                old = directory.with_name(f".{directory.name}.old")
                if old.exists():
                    shutil.rmtree(old)
                directory.rename(old)
            tmp.rename(directory)
            if old is not None:
                shutil.rmtree(old)
        except BaseException:
            shutil.rmtree(tmp, ignore_errors=True)
            raise


# ---------------------------------------------------------------------------
# pipeline stages
# ---------------------------------------------------------------------------


class Pipeline:
    """Lazily computed stages shared between subcommands."""

    def __init__(self, cfg: ScenarioConfig, report: Report):
        self.cfg = cfg
        self.a = cfg.analysis
        self.out = report
        self._cache = {}

    def _once(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    # spectrum --------------------------------------------------------------

    def spectrum(self) -> sp.Spectrum:
        return self._once("spectrum", self._spectrum)

    def _spectrum(self):
        cfg, a = self.cfg, self.a
        if isinstance(cfg.domain, sp.RectangleDomain):
            s = sp.build_spectrum_rectangle(cfg.domain, a["lambda_cap"], a["tuple_budget"])
        elif cfg.coefficient.kind == "constant":
            s = sp.build_spectrum_1d_constant(cfg.domain, a["k_max"], cfg.coefficient.value)
        elif cfg.coefficient.kind == "piecewise":
            s = sp.build_spectrum_1d_piecewise(cfg.domain, cfg.coefficient, a["k_max"], cfg.form)
        else:
            s = sp.build_spectrum_sturm_liouville(cfg.domain, cfg.coefficient, cfg.grid_size, a["k_max"])
        return s

    def report_spectrum(self):
        s = self.spectrum()
        self.out.table("spectrum", ("k", "lambda", "multiplicity", "label"), s.records())
        self.out.say("spectrum.family", s.family)
        self.out.say("spectrum.grouping", s.grouping)
        self.out.say("spectrum.entries", len(s))
        self.out.say("spectrum.modes", s.mode_count)
        self.out.say("spectrum.lambda_1", s.eigenvalues[0])
        self.out.say("spectrum.lambda_max", s.eigenvalues[-1])
        if len(s) >= 2:
            self.out.say("spectrum.lambda_star", s.lambda_star)
        if isinstance(self.cfg.domain, sp.Domain1D) and len(s) >= 20:
            la = sp.liouville_asymptotics(s, self.cfg.coefficient)
            self.out.say("liouville.ell", la.ell)
            self.out.say("liouville.leading_fit", la.leading)
            self.out.say("liouville.candidate_ell_squared", la.candidates["ell_squared"])
            self.out.say("liouville.candidate_pi_over_ell_squared", la.candidates["pi_over_ell_squared"])
            self.out.say("liouville.matches", la.matches)
            self.out.say("liouville.C1", la.C1)
            self.out.say("liouville.residual_bound", la.residual_bound)

    # damping ---------------------------------------------------------------

    def need_damping(self) -> dmp.DampingConfig:
        if self.cfg.damping is None:
            raise ConfigError("damping", "missing (required by this subcommand)")
        return self.cfg.damping

    def form(self) -> dmp.DampingForm:
        return self._once("form", lambda: dmp.DampingForm(self.spectrum(), self.need_damping()))

    def dense_gram(self, eigenspaces: int | None = None) -> dmp.GramMatrix:
        s = self.spectrum()
        if eigenspaces is None:
            eigenspaces = len(s.head_modes(min(self.a["dense_modes"], s.mode_count)))
        if eigenspaces > len(s):
            raise InvalidArgument(f"{eigenspaces} eigenspaces requested, spectrum has {len(s)}")
        key = ("dense", eigenspaces)
        return self._once(key, lambda: dmp.assemble_gram(s, self.need_damping(), (1, eigenspaces),
                                                         max_modes=10**5, form=self.form()))

    def beta_report(self) -> dmp.BetaReport:
        def run():
            s = self.spectrum()
            g = dmp.eigenspace_blocks(s, self.need_damping())
            g.form = self.form()
            ks = np.arange(1, len(s) + 1)
            beta = dmp.beta_sequence(s, g, ks)
            self._cache["betas"] = beta
            return dmp.fit_gamma0(s.eigenvalues, beta, ks, s.multiplicities, window=self.a["fit_window"])
        return self._once("beta", run)

    def norm_B(self) -> dmp.NormEstimate:
        return self._once("normB", lambda: dmp.estimate_norm_B(self.spectrum(), self.dense_gram()))

    def report_beta(self):
        r = self.beta_report()
        nb = self.norm_B()
        self.out.table("beta", ("k", "lambda", "multiplicity", "beta", "bound"), r.rows())
        self.out.say("damping.kind", self.cfg.damping.kind)
        self.out.say("beta.gamma0", r.gamma0)
        self.out.say("beta.c0", r.c0)
        self.out.say("norm_B.value", nb.value)
        self.out.say("norm_B.truncation", nb.truncation)

    # gaps ------------------------------------------------------------------

    def gap_report(self) -> gp.GapReport:
        return self._once("gaps", lambda: gp.fit_gamma1(self.spectrum(), window=self.a["fit_window"]))

    def report_gaps(self):
        s = self.spectrum()
        if len(s) >= 21:
            r = self.gap_report()
            self.out.table("gaps", ("k", "lambda", "gap", "quotient", "bound"), r.rows())
            self.out.say("gaps.gamma1", r.gamma1)
            self.out.say("gaps.c0", r.c0)
            self.out.say("gaps.lambda_star", r.lambda_star)
            self.out.say("gaps.lambda_star_k", r.lambda_star_k)
        xi = xi_value(self.cfg)
        if xi is None:
            return
        if isinstance(xi, Fraction):
            ratio = gp.RationalRatio.from_fraction(xi)
            b = gp.rational_gap_bound(ratio, self.a["search_cap"])
            self.out.say("gaps.xi", xi)
            self.out.say("gaps.rational_bound", b.bound)
            self.out.say("gaps.rational_attained", b.attained)
            self.out.say("gaps.search_cap", self.a["search_cap"])
        else:
            rows = []
            for eps in self.a["witness_epsilons"]:
                w = gp.irrational_gap_witness(xi, eps)
                rows.append((eps, w.k, w.j, f"{w.n[0]},{w.n[1]}", f"{w.m[0]},{w.m[1]}", w.gap, w.side))
            self.out.table("witnesses", ("epsilon", "k", "j", "n", "m", "gap", "side"), rows)
            self.out.say("gaps.xi", "irrational")
            self.out.say("gaps.witnesses", len(rows))
        if isinstance(self.cfg.domain, sp.RectangleDomain) and len(s) >= 2:
            eps = float(self.a["epsilon"])
            try:
                rc = gp.roth_gap_check(s, eps)
            except InvalidArgument as exc:
                self.out.say("roth.skipped", str(exc))
            else:
                self.out.say("roth.epsilon", eps)
                self.out.say("roth.c0_empirical", rc.c0_empirical)
                self.out.say("roth.argmin_k", rc.argmin_k if rc.argmin_k is not None else "none")
                self.out.say("roth.flag", rc.flag)
                self.out.say("roth.min_gap", rc.min_gap)
                if rc.rational_bound is not None:
                    self.out.say("roth.rational_bound", rc.rational_bound)

    # prediction ------------------------------------------------------------

    def prediction(self) -> pr.ScenarioPrediction:
        def run():
            a = self.a
            if a["gamma0"] is not None and a["gamma1"] is not None:
                return pr.predicted_m(a["gamma0"], a["gamma1"], self.cfg.name), "configured"
            if a["scenario"] is not None:
                rows = {r.scenario: r for r in pr.scenario_table(a["epsilon"])}
                if a["scenario"] not in rows:
                    raise ConfigError("analysis.scenario", f"unknown scenario {a['scenario']!r}")
                return rows[a["scenario"]], "catalogue"
            g0 = self.beta_report().gamma0
            g1 = self.gap_report().gamma1
            return pr.predicted_m(g0, g1, self.cfg.name), "fitted"
        return self._once("prediction", run)

    def m_pred(self) -> float:
        if self.a["m_pred"] is not None:
            return float(self.a["m_pred"])
        return float(self.prediction()[0].m)

    def report_predict(self):
        p, source = self.prediction()
        table = pr.scenario_table(self.a["epsilon"])
        header = ("scenario", "gamma0", "gamma1", "m", "energy_rate", "claimed_rate", "claimed_m", "flags")
        self.out.table("predictions", header, [r.row() for r in table])
        self.out.say("predict.source", source)
        self.out.say("predict.gamma0", p.gamma0)
        self.out.say("predict.gamma1", p.gamma1)
        self.out.lines.append(f"prediction: m = {fmt(p.m)}, rate = {fmt(p.energy_rate)}")
        if p.claimed_rate is not None:
            self.out.say("predict.claimed_rate", p.claimed_rate)
        for f in p.flags:
            self.out.say("predict.flag", f)

    # resolvent -------------------------------------------------------------

    def resolvent_profile(self) -> rs.ResolventProfile:
        def run():
            s = self.spectrum()
            T = self.a["truncation"]
            if 2 * T > len(s):
                raise ConfigError("analysis.truncation", f"2 * truncation exceeds the {len(s)} computed eigenspaces")
            g = self.dense_gram(2 * T)
            betas = dmp.beta_sequence(s, g, range(1, 2 * T + 1))
            nb = dmp.estimate_norm_B(s, g).value
            k_top = self.a["omega_k_top"] or max(2, T // 2)
            grid = rs.omega_grid(s, k_top, self.a["omega_points"])
            prof = rs.build_profile(s, g, betas, grid, T, nb, m_pred=self.m_pred(), window=self.a["fit_window"])
            return prof, nb
        return self._once("profile", run)

    def report_resolvent(self):
        prof, nb = self.resolvent_profile()
        T = self.a["truncation"]
        m = self.m_pred()
        header = ("omega", "bracket_k", "alpha_minus", "alpha_plus", "c_bound", "r_norm", "truncation_ok")
        self.out.table("profile", header, prof.rows())
        self.out.say("resolvent.truncation", T)
        self.out.say("resolvent.points", len(prof.points))
        self.out.say("resolvent.norm_B", nb)
        self.out.say("resolvent.c_star", prof.c_star)
        self.out.say("resolvent.envelope_holds", prof.envelope_holds)
        self.out.say("resolvent.growth_exponent", prof.growth_exponent)
        self.out.say("resolvent.m_pred", m)
        self.out.say("resolvent.growth_ok", prof.growth_ok)
        self.out.say("resolvent.all_converged", prof.all_converged)
        self.out.say("resolvent.max_doubling_change", prof.max_doubling_change)
        self.out.say("resolvent.bracket_ok_fraction", prof.bracket_ok_fraction)
        self.out.say("resolvent.c1_star", prof.c1_star)

    # simulation ------------------------------------------------------------

    def decay(self) -> tuple[sg.InitialData, sg.EnergyTrajectory, sg.DecayReport]:
        def run():
            s = self.spectrum()
            a = self.a
            head = s.head_modes(min(a["modes"], s.mode_count))
            g = self.dense_gram(len(head))
            data = sg.initial_data(s, g.size, a["initial_data"], self.cfg.seed)
            traj = sg.run_decay(s, g, data, a["t_end"], a["dt"], a["samples"])
            rep = sg.verify_decay_bound(traj, self.m_pred(), a["tail_fraction"])
            return data, traj, rep
        return self._once("decay", run)

    def report_simulate(self):
        a = self.a
        data, traj, rep = self.decay()
        m = self.m_pred()
        self.out.table("trajectory", ("t", "E", "D", "weighted_E"), traj.rows(m))
        self.out.say("simulate.modes", traj.meta["modes"])
        self.out.say("simulate.seed", self.cfg.seed)
        self.out.say("simulate.t_end", a["t_end"])
        self.out.say("simulate.dt", a["dt"])
        self.out.say("simulate.initial_data", data.tag)
        self.out.say("simulate.tail_energy_fraction", data.tail_fraction)
        self.out.say("simulate.spectral_abscissa", traj.meta["spectral_abscissa"])
        self.out.say("simulate.E0", traj.E[0])
        self.out.say("simulate.E_end", traj.E[-1])
        self.out.say("decay.m_pred", m)
        self.out.say("decay.rate_pred", rep.rate_pred)
        self.out.say("decay.rate_fitted", rep.r_emp)
        self.out.say("decay.sup_weighted", rep.sup_weighted)
        self.out.say("decay.growth", rep.growth)
        self.out.say("decay.bounded", rep.bounded)


def run(subcommand: str, cfg: ScenarioConfig) -> Report:
    """Execute a subcommand and write its outputs; returns the report."""
    if subcommand not in SUBCOMMANDS:
        raise ConfigError("subcommand", f"unknown subcommand {subcommand!r}")
    report = Report()
    report.say("scenario", cfg.name)
    report.say("subcommand", subcommand)
    p = Pipeline(cfg, report)
    if subcommand in ("spectrum", "report"):
        p.report_spectrum()
    if subcommand in ("beta", "report"):
        p.report_beta()
    if subcommand in ("gaps", "report"):
        p.report_gaps()
    if subcommand in ("predict", "report"):
        p.report_predict()
    if subcommand in ("resolvent", "report"):
        p.report_resolvent()
    if subcommand in ("simulate", "report"):
        p.report_simulate()
    report.write(cfg.output)
    return report


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="dampwave", description=__doc__.split("\n\n")[0])
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("config", help="scenario JSON file")
    parser.add_argument("--output", help="override the output directory")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, args.output)
        report = run(args.subcommand, cfg)
    except DampwaveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_status(exc)
    print("\n".join(report.lines))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
