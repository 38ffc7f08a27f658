"""Release acceptance: every criterion printed as one PASS/FAIL line.

Run with `pytest -v tests/test_acceptance.py`.  Each test computes its
criterion at the stated tolerance, prints a single verdict line, then
asserts it.
"""

import json

import numpy as np
import pytest

import noisyqah as nq
from noisyqah import cli_runner as cr

P_WEAK = nq.QahParams(xi0=1.0, xi_so=0.2, mz=1.2)
W_WEAK = nq.NoiseStrengths(0.05, 0.0, 0.01)
P_T1 = nq.QahParams(xi0=1.0, xi_so=0.2, mz=1.2)
W_T1 = nq.NoiseStrengths(0.1, 0.05, 0.45)
P_T2 = nq.QahParams(xi0=1.0, xi_so=2.0, mz=1.2)
W_T2 = nq.NoiseStrengths(1.6, 0.0, 0.8)

K_BULK = (1.2857142857142856, -1.8)          # generic off-surface momentum
K_SLOW = (-1.2857142857142858, -0.2571428571428571)  # sub-window beat
OMEGA_MIN_REF = 0.4063

SCHED = nq.EvolutionSchedule(30.0, 300, 2)


def _verdict(num, desc, ok):
    print(f"\n[criterion {num}] {desc}: {'PASS' if ok else 'FAIL'}")
    assert ok, f"criterion {num} failed: {desc}"


def _argmin_surface_node(grid):
    """Grid node of smallest mode frequency adjacent to a locator zero."""
    phi = grid.locator_field()
    best = None
    for transposed in (False, True):
        p = phi.T if transposed else phi
        om = grid.omega.T if transposed else grid.omega
        change = np.sign(p[:-1, :]) * np.sign(p[1:, :]) < 0
        for i, j in zip(*np.where(change)):
            for ii in (i, i + 1):
                val = om[ii, j]
                if np.isfinite(val) and (best is None or val < best[0]):
                    best = (float(val), (ii, j), transposed)
    val, (a, b), transposed = best
    if transposed:
        a, b = b, a
    return val, (float(grid.kx_values[a]), float(grid.ky_values[b]))


def test_criterion_1_trotter_and_fidelity():
    out = nq.discretization_sweep(K_BULK, P_WEAK, W_WEAK, SCHED,
                                  [30, 100, 300], seed=7, n_configs=5000)
    rss = [out[m]["rss"] for m in (30, 100, 300)]
    fids = {m: out[m]["fidelity"] for m in (30, 100, 300)}
    ok = rss[0] > rss[1] > rss[2] and all(fids[m] >= 0.99 for m in (100, 300))
    _verdict(1, "stochastic route reproduces the exact solution "
                f"(fidelity(M=100) = {fids[100]:.4f}, fidelity(M=300) = "
                f"{fids[300]:.4f} >= 0.99; residuals fall monotonically "
                f"{rss[0]:.3f} > {rss[1]:.3f} > {rss[2]:.3f})", ok)


def test_criterion_2_omega_min(weak_texture):
    val = nq.omega_min_on_dbis(weak_texture)
    oracle_ok = abs(val - OMEGA_MIN_REF) / OMEGA_MIN_REF <= 0.02
    node_val, k_star = _argmin_surface_node(weak_texture)
    assert node_val == pytest.approx(val, rel=1e-12)
    ens = nq.ensemble_average(k_star, P_WEAK, W_WEAK, SCHED, seed=7,
                              n_configs=3000)
    fit = nq.fit_modes(ens, cfg=nq.FitConfig(
        residual_threshold=max(0.05, 3000 ** -0.5)))
    sse_err = abs(fit.decomposition.omega - OMEGA_MIN_REF) / OMEGA_MIN_REF
    ok = oracle_ok and sse_err <= 0.05
    _verdict(2, f"on-surface frequency minimum (exact route {val:.4f} within "
                f"2% of {OMEGA_MIN_REF}; stochastic route at k* = "
                f"({k_star[0]:.3f}, {k_star[1]:.3f}) off by {100 * sse_err:.1f}% "
                "<= 5%)", ok)


def test_criterion_3_windings_match(weak_texture):
    curves = nq.extract_dbis(weak_texture)
    closed = len(curves) == 1 and curves[0].closed \
        and curves[0].n_mask_breaks == 0
    fld = nq.dynamical_field(weak_texture, curves[0])
    w_val = nq.winding_W(fld)
    c_val = nq.chern_number(P_WEAK)
    ks = weak_texture.kx_values
    try:
        nq.extract_dbis(nq.oracle_texture(nq.QahParams(1.0, 0.2, 5.0),
                                          W_WEAK, ks, ks))
        trivial_ok = False
    except nq.NoDbis:
        trivial_ok = True
    ok = closed and fld.n_masked == 0 and abs(w_val) == 1 == abs(c_val) \
        and trivial_ok
    _verdict(3, f"closed deformed inversion surface with |W| = {abs(w_val)} "
                f"= |C| = {abs(c_val)}, field defined everywhere, and no "
                "surface for the trivial band (mz = 5)", ok)


def test_criterion_4_detached_rings():
    rep = nq.classify_transition(P_T1, W_T1)
    touching = rep.phase == "type_I" and rep.dbis_interrupted
    ens = nq.ensemble_average(K_SLOW, P_T1, W_T1, SCHED, seed=7,
                              n_configs=2000)
    fit = nq.fit_modes(ens, cfg=nq.FitConfig(
        residual_threshold=max(0.05, 2000 ** -0.5)))
    overdamped_ok = fit.decomposition.overdamped
    ne = nq.winding_NE(P_T1, W_T1, nq.LoopS((1.357, 0.0), 0.55))
    ok = touching and overdamped_ok and ne == 0
    _verdict(4, "detached degenerate rings: surface interrupted by the "
                "rings, measured decay non-oscillating at the slow-beat "
                f"momentum, ring winding N_E = {ne} (= 0)", ok)


def test_criterion_5_charge_anchored():
    with pytest.raises(nq.Defective):
        nq.mode_decomposition(nq.build_liouvillian((0.0, 0.0), P_T2, W_T2),
                              nq.S_INIT)
    rep = nq.classify_transition(P_T2, W_T2)
    anchored = rep.phase == "type_II" \
        and any(c.charge_coincident for c in rep.ep_clusters)
    connects = rep.ep_dbis_distance is not None and rep.ep_dbis_distance < 0.2
    ne = nq.winding_NE(P_T2, W_T2, nq.LoopS((0.0, 0.0), 0.3))
    ok = anchored and connects and ne == 1
    _verdict(5, "charge-anchored degeneracy: defective point at the zone "
                "center, surface connects to it "
                f"(distance {rep.ep_dbis_distance:.3f}), N_E = {ne} (= +1)", ok)


def test_criterion_6_sweet_spot():
    rows = nq.sweet_spot_scan(P_WEAK, nq.NoiseStrengths(1.0, 1.0, 1.0),
                              [0.5, 5.0, 10.0], grid_n=101)
    ok = all(r["dbis_stable"] and not r["ep_on_dbis"] for r in rows)
    mags = ", ".join(str(r["magnitude"]) for r in rows)
    _verdict(6, "isotropic noise keeps the surface closed and degeneracy-"
                f"free at magnitudes {{{mags}}}", ok)


def test_criterion_7_ensemble_scaling():
    from importlib import resources
    doc = json.loads((resources.files("noisyqah") / "presets"
                      / "weak_noise.json").read_text())
    cfg = cr.parse_config(doc)
    out = cr.run_convergence(cfg, m_list=[30],
                             config_counts=[50, 200, 1000, 5000])
    slope = out["ensemble_slope"]
    rmss = [e["rms"] for e in out["ensemble_table"]]
    ok = abs(slope + 0.5) <= 0.1 and all(np.diff(rmss) < 0)
    _verdict(7, f"ensemble error shrinks as 1/sqrt(n): fitted slope "
                f"{slope:.3f} within -0.5 +/- 0.1", ok)


def test_criterion_8_reproducibility(tmp_path, weak_texture):
    doc = {
        "schema_version": 1, "label": "repro",
        "model": {"xi0": 1.0, "xi_so": 0.2}, "quench_mz": 1.2,
        "noise": {"wx": 0.05, "wy": 0.0, "wz": 0.01},
        "grid": {"kmin": -1.8, "kmax": 1.8, "n": 4},
        "schedule": {"t_total": 30.0, "n_steps": 300, "sample_stride": 4},
        "n_configs": 40, "seed": 7, "mode": "both",
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(doc))
    blobs = []
    for tag, workers in (("a", "1"), ("b", "2")):
        out = tmp_path / tag
        assert cr.main(["texture", "--config", str(cfg_path), "--out",
                        str(out), "--workers", workers]) == 0
        blobs.append({name: (out / name).read_bytes()
                      for name in ("summary.json", "texture_sse.csv",
                                   "texture_oracle.csv")})
    identical = all(blobs[0][n] == blobs[1][n] for n in blobs[0])

    # supporting invariants: cell norms, mode reconstruction, unitarity
    norms_ok = np.linalg.norm(weak_texture.s_bar, axis=-1).max() <= 1.0 + 1e-9
    rng = np.random.default_rng(0)
    recon_ok = True
    for _ in range(10):
        k = tuple(rng.uniform(-np.pi, np.pi, 2))
        dec = nq.mode_decomposition(nq.build_liouvillian(k, P_WEAK, W_WEAK),
                                    nq.S_INIT)
        times = np.linspace(0, 30, 31)
        exact = nq.exact_evolution(k, P_WEAK, W_WEAK, nq.S_INIT, times)
        recon_ok &= bool(np.abs(dec.evaluate(times)
                                - exact.polarization).max() < 1e-9)
    ok = identical and norms_ok and recon_ok
    _verdict(8, "reruns are byte-identical irrespective of worker count and "
                "core invariants hold (cell norms, mode reconstruction)", ok)
