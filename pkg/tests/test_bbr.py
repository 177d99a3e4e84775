import numpy as np
import pytest

from gldimer import bbr, closedform as cf, fock, liouville
from gldimer.errors import InteractionSingularityError
from gldimer.system import SystemParams

from conftest import closure_defect, fd_moment_derivative

P100 = SystemParams(J=1.0, U=0.0, gamma=1.5, n0=100)


def test_kernel_implementations_agree():
    from gldimer import _moment_rhs_py as pk

    try:
        from gldimer import _moment_kernel as ck
    except ImportError:
        pytest.skip("compiled kernel not built")
    rng = np.random.default_rng(9)
    for _ in range(100):
        y = rng.normal(scale=40, size=14)
        a = ck.moment_rhs(y, 1.1, 0.3, 0.45, 0.6, np.empty(14))
        b = pk.moment_rhs(y, 1.1, 0.3, 0.45, 0.6, np.empty(14))
        assert np.array_equal(np.asarray(a), np.asarray(b))


def test_pure_state_moments_examples():
    st = bbr.pure_state_moments(np.pi / 2, 0.0, 1)
    assert st.s == pytest.approx([1, 0, 0], abs=1e-15)
    assert st.n == 1.0
    rng = np.random.default_rng(1)
    for _ in range(5):
        theta, phi = rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi)
        st = bbr.pure_state_moments(theta, phi, 7)
        assert st.purity == pytest.approx(1.0, abs=1e-13)


def test_pure_state_moments_match_fock_construction():
    basis = fock.build_basis(8)
    theta, phi, n = np.pi / 2, np.pi / 2, 5
    rho = fock.density_from_state(fock.coherent_state(basis, theta, phi, n))
    m = fock.bloch_moments(rho, basis)
    st = bbr.pure_state_moments(theta, phi, n)
    assert st.vector == pytest.approx(m.vector, abs=1e-10)


def test_moment_state_vector_roundtrip():
    st = bbr.pure_state_moments(1.2, 0.4, 9)
    again = bbr.MomentState.from_vector(st.vector)
    assert again.vector == pytest.approx(st.vector)
    assert np.allclose(again.delta, again.delta.T)


def test_rhs_u0_first_moments_linear():
    # at U = 0 the first-moment block is the known linear system and is
    # unaffected by the covariances
    rng = np.random.default_rng(2)
    y = rng.normal(scale=5, size=14)
    y2 = y.copy()
    y2[4:] = rng.normal(scale=5, size=10)
    p = SystemParams(J=1.3, U=0.0, gamma=0.7, n0=6)
    d1 = bbr.moment_rhs(y, p, bbr.FixedU(0.0))
    d2 = bbr.moment_rhs(y2, p, bbr.FixedU(0.0))
    assert d1[:4] == pytest.approx(d2[:4], abs=1e-12)
    gm, gp = p.gamma_minus, p.gamma_plus
    assert d1[0] == pytest.approx(-gm * y[0])
    assert d1[1] == pytest.approx(2 * p.J * y[2] - gm * y[1])
    assert d1[2] == pytest.approx(-2 * p.J * y[1] + gp * y[3] - gm * y[2]
                                  + p.gamma_gain)
    assert d1[3] == pytest.approx(-gm * y[3] + gp * y[2] + p.gamma_gain)


def test_rhs_vanishes_at_u0_steady_state():
    res = bbr.steady_root_search(P100, bbr.FixedU(0.0),
                                 bbr.u0_steady_guess(P100))
    assert res.found
    d = bbr.moment_rhs(res.state.vector, P100, bbr.FixedU(0.0))
    assert np.max(np.abs(d)) < 1e-9
    alpha = cf.steady_alpha(P100)
    assert res.state.s[0] == pytest.approx(0.0, abs=1e-8)
    assert res.state.s[1] == pytest.approx(alpha.s_y, abs=1e-8)
    assert res.state.s[2] == pytest.approx(alpha.s_z, abs=1e-8)
    assert res.state.n == pytest.approx(alpha.n, abs=1e-8)


def test_rhs_matches_exact_derivative_u0():
    basis = fock.build_basis(12)
    params = SystemParams(J=1.0, U=0.0, gamma=0.5, n0=5)
    rho0 = fock.density_from_state(fock.coherent_state(basis, 1.2, 0.7, 5))
    y0 = fock.bloch_moments(rho0, basis).vector
    rhs = bbr.moment_rhs(y0, params, bbr.FixedU(0.0))
    fd = fd_moment_derivative(rho0, params, basis)
    assert rhs == pytest.approx(fd, abs=1e-6)


def test_rhs_matches_exact_derivative_with_defect_accounting():
    # with interaction the covariance equations differ from the exact
    # derivative by exactly the factorized third-order terms
    basis = fock.build_basis(12)
    params = SystemParams.from_g(g=0.5, gamma=0.5, n0=5)
    rho0 = fock.density_from_state(fock.coherent_state(basis, 1.2, 0.7, 5))
    y0 = fock.bloch_moments(rho0, basis).vector
    rhs = bbr.moment_rhs(y0, params, bbr.FixedU(params.U))
    fd = fd_moment_derivative(rho0, params, basis)
    defect = closure_defect(rho0, basis, params.U)
    assert fd[:4] == pytest.approx(rhs[:4], abs=1e-6)
    assert fd == pytest.approx(rhs + defect, abs=2e-6)
    # the defect is a real effect here, not noise
    assert np.max(np.abs(defect)) > 1e-2


def test_integrate_u0_equals_closed_form():
    st0 = bbr.pure_state_moments(np.pi / 2, 0.3, 5)
    params = SystemParams(J=1.0, U=0.0, gamma=0.8, n0=5)
    traj = bbr.integrate(st0, 20.0, params, bbr.FixedU(0.0))
    pred = cf.oscillatory_solution(st0.vector[:4], params).moments(traj.ts)
    assert np.max(np.abs(traj.ys[:, :4].T - pred)) < 1e-8


def test_integrate_closed_system_conserves_n():
    st0 = bbr.pure_state_moments(1.0, 0.5, 5)
    params = SystemParams(J=1.0, U=0.1, gamma=0.0, n0=5)
    traj = bbr.integrate(st0, 10.0, params, bbr.FixedU(0.1))
    assert np.max(np.abs(traj.n - 5)) < 1e-10


def test_interacting_symmetric_states_oscillate_weakly():
    # with interaction the balanced stationary-angle state still shows the
    # weakest purity oscillations of the pure-state family
    from gldimer import meanfield

    params = SystemParams.from_g(g=0.5, gamma=1.5, n0=100)
    ground, _ = meanfield.pt_stationary_states(1.0, 1.5)

    def purity_amplitude(theta, phi):
        st0 = bbr.pure_state_moments(theta, phi, 100)
        traj = bbr.integrate(st0, 6.0, params, bbr.FixedU(params.U),
                             rtol=1e-9, atol=1e-11)
        return traj.purity.max() - traj.purity.min()

    amp_ground = purity_amplitude(ground.theta, ground.phi)
    assert amp_ground < 0.16
    for theta, phi in ((np.pi / 2, 0.0), (np.pi / 2, np.pi), (1.0, 2.0)):
        assert amp_ground < purity_amplitude(theta, phi)


def test_constant_g_singularity():
    st = bbr.MomentState(s=np.array([0.5, 0, 0]), n=1.0 + 1e-8,
                         delta=np.zeros((4, 4)))
    params = SystemParams(J=1.0, U=0.0, gamma=0.1, n0=2)
    with pytest.raises(InteractionSingularityError):
        bbr.moment_rhs(st.vector, params, bbr.ConstantG(0.5))


def test_root_residual_contract_small_scale():
    # at desk scale the returned residual honors the absolute contract
    for n0, gamma in ((5, 0.5), (10, 0.8)):
        params = SystemParams(J=1.0, U=0.0, gamma=gamma, n0=n0)
        res = bbr.steady_root_search(params, bbr.FixedU(0.0),
                                     bbr.u0_steady_guess(params),
                                     residual_tol=1e-10)
        assert res.found
        assert res.residual < 1e-10


def test_root_search_interacting_vs_exact(fig3_params, fig3_steady):
    res = bbr.steady_root_search(fig3_params, bbr.FixedU(fig3_params.U),
                                 bbr.u0_steady_guess(fig3_params))
    assert res.found
    m = fig3_steady.moments
    scale = max(1.0, m.n)
    # closed moment equations approximate the exact steady state to a few
    # per cent of the particle number at this interaction strength
    assert abs(res.state.s[0] - m.s_x) / scale < 0.05
    assert abs(res.state.s[1] - m.s_y) / scale < 0.05
    assert abs(res.state.s[2] - m.s_z) / scale < 0.05
    assert abs(res.state.n - m.n) / scale < 0.08


def test_root_search_reports_unphysical_roots():
    # just past the constant-g boundary the remaining root is unphysical
    params = SystemParams.from_g(g=0.5, gamma=1.75, n0=100)
    sweep = bbr.sweep_gamma(np.arange(1.5, 1.74, 0.02), 0.5, 100,
                            "constant-g")
    last = [p for p in sweep.points if p.exists][-1].state
    res = bbr.steady_root_search(params, bbr.ConstantG(0.5), last)
    assert res.converged and not res.physical and not res.found


def test_sweep_warm_start_continuity():
    sweep = bbr.sweep_gamma(np.arange(0.1, 1.05, 0.05), 0.3, 20, "fixed-U")
    states = [p.state for p in sweep.points if p.exists]
    assert len(states) >= 10
    for a, b in zip(states, states[1:]):
        assert abs(b.n - a.n) / max(1.0, a.n) < 0.6


def test_sweep_boundary_resolution():
    sweep = bbr.sweep_gamma(np.arange(0.2, 1.3, 0.1), 0.5, 100, "fixed-U",
                            boundary_resolution=1e-4)
    assert sweep.boundary == pytest.approx(0.999, abs=5e-3)
    existing = [p.gamma for p in sweep.points if p.exists]
    assert max(existing) < sweep.boundary


def test_sweep_csv_schema(tmp_path):
    sweep = bbr.sweep_gamma([0.2, 0.4], 0.1, 10, "fixed-U")
    path = tmp_path / "sweep.csv"
    bbr.sweep_to_csv([sweep], path)
    lines = path.read_text().splitlines()
    assert lines[0] == "gamma,g,exists,s_x,s_y,s_z,n,P,Delta_n"
    assert len(lines) == 3


def test_divergence_time_report():
    # closed moment dynamics tracks the exact one for a limited span;
    # measure and report where the first moments drift past one per cent
    basis = fock.build_basis(16)
    params = SystemParams.from_g(g=0.5, gamma=0.5, n0=4)
    rho0 = fock.density_from_state(
        fock.coherent_state(basis, np.pi / 2, 0.0, 4))
    st0 = bbr.MomentState.from_vector(fock.bloch_moments(rho0, basis).vector)
    horizon = 12.0
    cfg = liouville.PropagationConfig(rtol=1e-10, atol=1e-12,
                                      sample_interval=0.25,
                                      truncation_ceiling=1e-3)
    exact = liouville.moment_trajectory(rho0, horizon, params, basis, cfg)
    approx = bbr.integrate(st0, horizon, params, bbr.FixedU(params.U),
                           sample_interval=0.25)
    scale = max(4.0, np.max(exact.n))
    err = np.max(np.abs(approx.ys[:, :4]
                        - np.column_stack((exact.s_x, exact.s_y, exact.s_z,
                                           exact.n))), axis=1) / scale
    beyond = np.flatnonzero(err > 0.01)
    t_div = approx.ts[beyond[0]] if len(beyond) else np.inf
    print(f"\nmoment-closure 1% divergence time at N0=4, g=0.5, gamma=0.5: "
          f"t = {t_div:.2f}/J (horizon {horizon}/J)")
    # short-time accuracy is a hard requirement; the long-time drift is
    # reported, not asserted
    assert np.all(err[approx.ts <= 2.0] < 0.01)
