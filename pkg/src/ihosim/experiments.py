"""Experiment runners used by the command line.

Each runner takes a validated RunConfig and returns an ``ExperimentOutput``:
named tables with fixed column headers, a JSON-ready summary, and the
numerical settings that were actually used (for the manifest).
"""
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import dynamics, measurement, otoc, scattering
from .duality import MetricDerivatives, hawking_temperature, surface_gravity, tunneling_rate
from .errors import ConfigError, TruncationError, TruncationWarning
from .operators import FockSpace, GridSpec, fock_state, fock_superposition, fock_to_grid

HEADERS = {
    "otoc": ("t_dimless", "C_over_x0sq", "C_SI_m2"),
    "scatter_density": ("x_dimless", "density_T", "density_R"),
    "scatter_transmission": ("eps0", "P_T", "P_R", "P_T_analytic"),
    "scatter_probe": ("t_dimless", "density"),
    "squeeze": ("n", "P_squeezed", "P_thermal"),
    "squeeze_mean": ("t_dimless", "mean_n_numeric", "mean_n_analytic"),
    "measure_signal": ("t", "P_down_phase0", "P_down_phase90"),
    "measure_density": ("x_dimless", "density_reconstructed", "density_true"),
    "smatrix": ("eps", "T2", "R2"),
    "duality": ("fprime", "gprime", "kappa", "T_hawking"),
    "rwa": ("t_dimless", "fidelity"),
}


@dataclass
class Table:
    schema: str
    columns: list

    @property
    def header(self):
        return HEADERS[self.schema]


@dataclass
class ExperimentOutput:
    tables: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    convergence: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)


def _tag(v):
    return format(v, "g").replace("-", "m")


def run_otoc(cfg, out):
    d = cfg.derived
    p = cfg.params
    times = np.asarray(cfg.numerics["times"])
    space = FockSpace(cfg.numerics["dim"])
    spec = dynamics.HamiltonianSpec("squeeze", phase=cfg.physical["phi"])
    fits = {}
    lo, hi = p["window"]
    can_fit = times[0] <= lo and times[-1] >= hi
    for n in p["levels"]:
        if n + 1 >= space.dim:
            raise ConfigError(f"[otoc] level {n} needs dim > {n + 1}")
        psi = fock_superposition(space, [(n, 1.0), (n + 1, 1.0)])
        curve = otoc.otoc_pure_state(spec, psi, times)
        out.tables[f"otoc_n{n}"] = Table("otoc", [times, curve.values, curve.values * d.x0 ** 2])
        ref = otoc.closed_form_otoc(n, times)
        entry = {"max_rel_err_closed_form": float(np.max(np.abs(curve.values / ref - 1)))}
        if can_fit:
            f = otoc.fit_lyapunov(curve, (lo, hi), p["fit_method"])
            entry.update(lambda_fit=f.lambda_fit, residual=f.residual, valid=f.valid,
                         lambda_SI_s=f.lambda_fit * d.lambda_L,
                         mss_ratio=otoc.mss_check(f, 1.0 / (2 * math.pi))["ratio"])
        fits[f"n={n}"] = entry
    out.summary["rwa_model"] = fits
    out.convergence["dim"] = space.dim
    if p["driven_xi"]:
        dspace = FockSpace(p["driven_dim"])
        psi = fock_superposition(dspace, [(0, 1.0), (1, 1.0)])
        driven = {}
        for xi in p["driven_xi"]:
            lab = dynamics.HamiltonianSpec("lab", omega0=d.omega0, xi=xi, phase=cfg.physical["phi"],
                                           mass=cfg.physical["mass_kg"])
            curve = otoc.driven_otoc(lab, psi, p["driven_lambda_t"], n_samples=p["driven_samples"])
            out.tables[f"otoc_driven_xi{_tag(xi)}"] = Table(
                "otoc", [curve.times, curve.values, curve.values * d.x0 ** 2])
            entry = {"lambda_nominal_s": lab.lambda_L, "dt_s": curve.meta["dt"]}
            if curve.times[-1] >= hi:
                f = otoc.fit_lyapunov(curve, (lo, hi), p["fit_method"])
                entry.update(lambda_fit_dimless=f.lambda_fit, lambda_fit_s=f.lambda_fit * lab.lambda_L,
                             ratio_to_nominal=f.lambda_fit, residual=f.residual)
            driven[f"xi={xi:g}"] = entry
        out.summary["driven"] = driven
        out.convergence["driven_dim"] = dspace.dim


def run_scatter(cfg, out):
    d = cfg.derived
    p = cfg.params
    num = cfg.numerics
    grid = GridSpec(num["x_max"], num["n_points"])
    t_snap = d.to_dimless_time(p["snapshot_time_s"])
    probe = d.to_dimless_length(p["probe_x_m"])
    spec = scattering.PacketSpec(p["eps0"], p["width"], p["t_start"])
    snaps = [t_snap] if p["t_start"] < t_snap <= p["t_final"] else []
    res = scattering.scatter_evolve(spec, grid, p["t_final"], num["dt"], absorber=p["absorber"],
                                    probe_x=probe, snapshot_times=snaps)
    x = grid.x
    rho = res.snapshots[0][1] if res.snapshots else res.density_T + res.density_R
    out.tables["scatter_density"] = Table(
        "scatter_density", [x, np.where(x < 0, rho, 0.0), np.where(x > 0, rho, 0.0)])
    out.tables["scatter_probe"] = Table("scatter_probe", [res.probe_times, res.probe_density])
    overlay = scattering.PacketSpec(p["eps0"], p["overlay_width"], p["t_start"])
    dr, dt_ = scattering.asymptotic_densities(overlay, grid, t_snap)
    out.tables["scatter_asymptotic"] = Table("scatter_density", [x, dt_, dr])
    spectrum = scattering.transmission_spectrum(grid, num["dt"], p["spectrum_t_record"])
    e0 = np.asarray(p["sweep_eps0"])
    pt = np.array([spectrum.packet_transmission(e, p["sweep_width"]) for e in e0])
    pa = np.array([scattering.averaged_crossing(e, p["sweep_width"]) for e in e0])
    out.tables["scatter_transmission"] = Table("scatter_transmission", [e0, pt, 1.0 - pt, pa])
    t_eff = scattering.fit_temperature(e0, pt, p["sweep_width"])
    out.summary.update({
        "packet": {"eps0": spec.eps0, "width": spec.width, "P_T": res.P_T, "P_R": res.P_R,
                   "P_T_analytic": res.P_T_analytic, "cleared": res.cleared,
                   "norm_drift": res.norm_drift, "snapshot_t_dimless": t_snap,
                   "probe_x_dimless": probe},
        "sweep": {"width": p["sweep_width"], "max_rel_err": float(np.max(np.abs(pt / pa - 1))),
                  "T_eff": t_eff, "T_eff_times_2pi": 2 * math.pi * t_eff,
                  "T_H_K": d.hawking_temperature,
                  "mss_ratio": otoc.mss_check(1.0, t_eff)["ratio"]},
    })
    out.convergence.update(dt=res.meta["dt"], grid={"x_max": grid.x_max, "n_points": grid.n_points},
                           spectrum_t_record=p["spectrum_t_record"])


def run_smatrix(cfg, out):
    eps = np.asarray(cfg.params["eps"])
    t2, r2 = scattering.transmission_reflection(eps)
    out.tables["smatrix"] = Table("smatrix", [eps, t2, r2])
    defect = max(float(np.max(np.abs(s.conj().T @ s - np.eye(2))))
                 for s in map(scattering.smatrix, eps))
    out.summary.update(max_unitarity_defect=defect,
                       max_sum_defect=float(np.max(np.abs(t2 + r2 - 1))),
                       max_ratio_defect=float(np.max(np.abs(t2 / r2 * np.exp(2 * np.pi * eps) - 1))))


def run_squeeze(cfg, out):
    p = cfg.params
    r = p["lambda_t"]
    space = FockSpace(cfg.numerics["dim"])
    prop = dynamics.Propagator(dynamics.build_hamiltonian(dynamics.HamiltonianSpec("squeeze"), space))
    vac = fock_state(space, 0)
    numeric = prop.evolve(vac, r).populations()
    report = measurement.radiation_report(r, p["nbar"], p["n_show"])
    out.tables["squeeze"] = Table("squeeze", [report["n"], report["P_squeezed"], report["P_thermal"]])
    ts = np.linspace(0.0, r, p["n_curve"])
    means = np.array([float(np.dot(space.n, np.abs(prop.apply(vac.amplitudes, t)) ** 2)) for t in ts])
    out.tables["squeeze_mean"] = Table("squeeze_mean", [ts, means, np.sinh(ts) ** 2])
    dist = measurement.squeezed_vacuum_populations(r, space.dim - 1, tail_tol=1.0)
    if dist.tail_mass > 1e-3:
        raise TruncationError(f"squeezed vacuum at r={r:g} leaves {dist.tail_mass:.2e} above n={space.dim - 1}; "
                              f"raise [numerics] dim")
    if dist.tail_mass > 1e-8:
        warnings.warn(f"squeezed tail mass {dist.tail_mass:.2e} beyond dim {space.dim}", TruncationWarning)
    exact = dist.populations
    out.summary.update(lambda_t=r, nbar=p["nbar"], even_only=report["even_only"],
                       thermal_P1=report["thermal_P1"], mean_n=report["mean_squeezed"],
                       max_population_error=float(np.max(np.abs(numeric - exact))),
                       max_odd_population=float(np.max(numeric[1::2])))
    out.convergence["dim"] = space.dim


def run_measure(cfg, out):
    p = cfg.params
    num = cfg.numerics
    grid = GridSpec(num["x_max"], num["n_points"])
    if p["state"] == "fock":
        top = max(p["levels"])
        st = fock_to_grid(fock_superposition(FockSpace(top + 2), [(n, 1.0) for n in p["levels"]]), grid)
        lobes = None
    else:
        spec = scattering.PacketSpec(0.0, 2.0, -3.0)
        res = scattering.scatter_evolve(spec, grid, p["scatter_time"], num["dt"], absorber=80.0)
        st = res.state.normalized()
        lobes = res.P_R / res.P_T
    times = np.linspace(0.0, p["t_max"], p["n_times"])
    s0 = measurement.readout_signal(st, p["rabi"], times, 0.0)
    s90 = measurement.readout_signal(st, p["rabi"], times, 0.5 * math.pi)
    rec = measurement.reconstruct_density(s0, s90, grid.x, apodization=p["apodization"])
    out.tables["measure_signal"] = Table("measure_signal", [times, s0.p_down, s90.p_down])
    out.tables["measure_density"] = Table("measure_density", [grid.x, rec.density, st.density()])
    left, right = rec.lobe_masses()
    out.summary.update(l2_error=rec.l2_error(st.density()), negative_mass=rec.negative_mass,
                       k_max=rec.k_max, dk=rec.dk, apodization=p["apodization"])
    if lobes is not None:
        out.summary.update(lobe_ratio=right / left, P_R_over_P_T=lobes)


def run_rwa(cfg, out):
    d = cfg.derived
    p = cfg.params
    space = FockSpace(cfg.numerics["dim"])
    psi = fock_superposition(space, [(0, 1.0), (1, 1.0)])
    lab = dynamics.HamiltonianSpec("lab", omega0=d.omega0, xi=cfg.physical["xi"],
                                   phase=cfg.physical["phi"], mass=cfg.physical["mass_kg"])
    eff = dynamics.Propagator(dynamics.build_hamiltonian(lab.effective_iho(), space))
    lam = lab.lambda_L
    t_final = p["lambda_t_max"] / lam
    dt = 2 * math.pi / (dynamics.STEPS_PER_DRIVE_PERIOD * lab.drive_frequency)
    n_steps = int(math.ceil(t_final / dt - 1e-9))
    every = max(1, n_steps // (p["n_samples"] - 1))
    ts, fs = [], []

    def observe(t, amps):
        ref = eff.apply(psi.amplitudes, t * lam)
        ts.append(t * lam)
        fs.append(abs(np.vdot(ref, amps)) ** 2)

    dynamics.propagate_stepped(lab, psi, t_final, dt, observer=observe, every=every)
    ts, fs = np.array(ts), np.array(fs)
    out.tables["rwa"] = Table("rwa", [ts, fs])
    below = np.nonzero(fs < 0.99)[0]
    out.summary.update(xi=lab.xi, final_fidelity=float(fs[-1]), min_fidelity=float(fs.min()),
                       validity_window_lambda_t=float(ts[below[0]]) if below.size else None,
                       note="validity_window is the first sampled lambda*t with fidelity < 0.99 "
                            "(None: stays above within the run)")
    out.convergence.update(dim=space.dim, dt_s=t_final / n_steps)


def run_duality(cfg, out):
    p = cfg.params
    if len(p["fprime"]) != len(p["gprime"]):
        raise ConfigError("[duality] fprime and gprime must list the same number of values")
    mds = [MetricDerivatives(f, g) for f, g in zip(p["fprime"], p["gprime"])]
    out.tables["duality"] = Table("duality", [
        np.array(p["fprime"]), np.array(p["gprime"]),
        np.array([surface_gravity(m) for m in mds]), np.array([hawking_temperature(m) for m in mds])])
    eps = np.asarray(p["eps"])
    temp = 1.0 / (2 * math.pi)
    t2, r2 = scattering.transmission_reflection(eps)
    ratio = t2 / r2
    t2m, r2m = scattering.transmission_reflection(-eps)
    gam = tunneling_rate(eps, temp)
    out.summary.update(
        max_rate_vs_ratio=float(np.max(np.abs(gam / ratio - 1))),
        max_pair_ratio_defect=float(np.max(np.abs((gam / tunneling_rate(-eps, temp)) / (ratio / (t2m / r2m)) - 1))))


RUNNERS = {
    "otoc": run_otoc,
    "scatter": run_scatter,
    "smatrix": run_smatrix,
    "squeeze": run_squeeze,
    "measure": run_measure,
    "rwa": run_rwa,
    "duality": run_duality,
}


def run_experiment(cfg):
    out = ExperimentOutput()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        RUNNERS[cfg.experiment](cfg, out)
    seen = []
    for w in caught:
        msg = f"{w.category.__name__}: {w.message}"
        if msg not in seen:
            seen.append(msg)
    out.warnings = seen
    return out
