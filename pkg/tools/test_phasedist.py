"""
相位分布测试: 振子与二能级原子的 P(θ)/P(φ)、闭式解对照、圆统计量与预设序列的定性结论。

用法:
  - pytest tools/test_phasedist.py
  - python tools/test_phasedist.py
"""

import math
import sys
from fractions import Fraction
from pathlib import Path

PROJECT_ROOT = Path(__file__).resolve().parents[1]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

import numpy as np
import pytest
from scipy.stats import poisson

from core.bath.kernels import BathParams, TemperatureRegime, gamma_closed
from core.cli.presets import preset_scenarios
from core.cli.scenario import build_initial_state, compute_scenarios
from core.errors import ConfigurationError, NumericalError
from core.phasedist.distribution import (
    PhaseDistribution,
    angle_grid,
    atomic_closed_form,
    atomic_contrast,
    atomic_phase_distribution_general,
    oscillator_phase_distribution,
)
from core.phasedist.stats import circular_distance, circular_stats, count_local_maxima, wrap_angle
from core.states.atomic import AtomicStateParams, DEFAULT_THETA_S, atomic_initial_dm
from core.states.oscillator import (
    CoherentParams,
    KerrParams,
    SqueezeParams,
    coherent_coeffs,
    coherent_dimension,
    kerr_coeffs,
    pure_state_dm,
    split_sectors,
    squeezed_coherent_dm,
    squeezed_kerr_coeffs,
)
from core.systems.propagator import ReducedDensityMatrix, propagate
from core.systems.spectra import Basis, SystemSpec


ZERO = TemperatureRegime.ZERO_TEMPERATURE
HIGH = TemperatureRegime.HIGH_TEMPERATURE
UNITARY = BathParams(0.0, 100.0, 0.0, 0.0, 0.0, ZERO)
COLD_SQUEEZED = BathParams(0.0025, 100.0, 0.0, 2.0, 0.0, ZERO)
BASE = CoherentParams.from_alpha2(5.0)
TWO_LEVEL = SystemSpec.two_level(1.0)
HALF = Fraction(1, 2)


def _coherent_dm(params=BASE):
    return pure_state_dm(coherent_coeffs(params, coherent_dimension(params)))


def _direct_sum(rho: ReducedDensityMatrix, angles: np.ndarray) -> np.ndarray:
    """逐点双重求和 (1/2π) Σ ρ_{mn} e^{i(n−m)θ}"""
    n = np.arange(rho.dim)
    values = np.empty(len(angles))
    for k, theta in enumerate(angles):
        phases = np.exp(1j * np.subtract.outer(n, n).T * theta)
        values[k] = float(np.sum(rho.entries * phases).real) / (2 * math.pi)
    return values


def _preset_stats(name, overrides=None):
    results = compute_scenarios(preset_scenarios(name, overrides))
    return {cfg.name.split("/", 1)[1]: (t, circular_stats(pd), pd) for cfg, t, pd in results}


def test_angle_grid():
    grid = angle_grid(16)
    assert grid[0] == 0.0 and len(grid) == 16
    assert grid[-1] < 2 * math.pi
    with pytest.raises(ConfigurationError):
        angle_grid(4)


def test_thermal_diagonal_is_uniform():
    rho = ReducedDensityMatrix(np.diag(poisson.pmf(np.arange(40), 3.0)), Basis.NUMBER)
    pd = oscillator_phase_distribution(rho, 64)
    assert np.max(np.abs(pd.values - np.trace(rho.entries).real / (2 * math.pi))) < 1e-15


def test_fourier_assembly_matches_direct_sum():
    rho = propagate(squeezed_coherent_dm(BASE, SqueezeParams(0.5, math.pi / 4)), SystemSpec.harmonic(1.0),
                    COLD_SQUEEZED, 0.1)
    pd = oscillator_phase_distribution(rho, 64)
    assert np.max(np.abs(pd.values - _direct_sum(rho, pd.grid))) < 1e-12


def test_rigid_rotation_under_unitary_evolution():
    spec = SystemSpec.harmonic(1.0)
    for rho0 in (_coherent_dm(), squeezed_coherent_dm(BASE, SqueezeParams(0.5, math.pi / 4))):
        for t in (0.1, 0.5):
            pd = oscillator_phase_distribution(propagate(rho0, spec, UNITARY, t), 128)
            shifted = _direct_sum(rho0, pd.grid + t)
            assert np.max(np.abs(pd.values - shifted)) < 1e-10


def test_initial_coherent_peak_at_theta0():
    for theta0 in (0.0, 1.2):
        params = CoherentParams.from_alpha2(5.0, theta0)
        pd = oscillator_phase_distribution(propagate(_coherent_dm(params), SystemSpec.harmonic(1.0), UNITARY, 0.0),
                                           1024)
        stats = circular_stats(pd)
        assert circular_distance(stats.peak_angle, theta0) < 1e-5
        assert circular_distance(stats.mean_angle, theta0) < 1e-9


def test_normalization_and_positivity_for_presets():
    for name in ("fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8"):
        for cfg, t, pd in compute_scenarios(preset_scenarios(name)):
            assert pd.size == 1024
            assert abs(pd.integral() - 1.0) < 1e-6, f"{cfg.name} t={t}"
            assert pd.values.min() >= 0.0


def test_dual_path_equality():
    for name in ("fig6", "fig7", "fig8"):
        for cfg in preset_scenarios(name):
            initial = build_initial_state(cfg)
            for t in cfg.times:
                general = atomic_phase_distribution_general(propagate(initial, cfg.system, cfg.bath, t), 1024)
                closed = atomic_closed_form(cfg.state.atomic, cfg.system, cfg.bath, t, 1024)
                assert np.max(np.abs(general.values - closed.values)) < 1e-12, cfg.name


def test_dicke_uniform():
    for m_tilde in (HALF, -HALF):
        params = AtomicStateParams.dicke(m_tilde)
        general = atomic_phase_distribution_general(
            propagate(atomic_initial_dm(params), TWO_LEVEL, COLD_SQUEEZED, 0.3), 256)
        closed = atomic_closed_form(params, TWO_LEVEL, COLD_SQUEEZED, 0.3, 256)
        assert np.max(np.abs(general.values - 1 / (2 * math.pi))) < 1e-14
        assert np.max(np.abs(closed.values - 1 / (2 * math.pi))) < 1e-14


def test_atomic_coherent_peak_value():
    params = AtomicStateParams.coherent(math.pi / 4, math.pi / 4)
    expected = (1 + math.pi / 4 * math.sin(math.pi / 4)) / (2 * math.pi)
    closed = atomic_closed_form(params, TWO_LEVEL, UNITARY, 0.0, 8)
    general = atomic_phase_distribution_general(atomic_initial_dm(params), 8)
    assert abs(closed.values[1] - expected) < 1e-15
    assert abs(general.values[1] - expected) < 1e-14
    assert abs(expected - 0.2475) < 1e-4
    assert int(np.argmax(general.values)) == 1


def test_south_plus_north():
    for bath, t in ((COLD_SQUEEZED, 0.1), (BathParams(0.025, 100.0, 300.0, 1.0, 0.0, HIGH), 0.05)):
        south = atomic_closed_form(AtomicStateParams.squeezed(DEFAULT_THETA_S, -HALF), TWO_LEVEL, bath, t, 512)
        north = atomic_closed_form(AtomicStateParams.squeezed(DEFAULT_THETA_S, HALF), TWO_LEVEL, bath, t, 512)
        assert np.max(np.abs(south.values + north.values - 1 / math.pi)) < 1e-14


def test_high_temperature_uniform_limit():
    hot = BathParams(0.025, 100.0, 300.0, 2.0, 0.0, HIGH)
    for params in (AtomicStateParams.coherent(math.pi / 4, math.pi / 4),
                   AtomicStateParams.squeezed(DEFAULT_THETA_S, -HALF),
                   AtomicStateParams.squeezed(DEFAULT_THETA_S, HALF)):
        pd = atomic_closed_form(params, TWO_LEVEL, hot, 5.0, 512)
        assert np.max(np.abs(pd.values - 1 / (2 * math.pi))) < 1e-3


def test_contrast_power_law():
    for gamma0 in (0.0025, 0.025):
        bath = BathParams(gamma0, 100.0, 0.0, 0.0, 0.0, ZERO)
        for omega in (1.0, 2.0):
            for params in (AtomicStateParams.coherent(math.pi / 4, math.pi / 4),
                           AtomicStateParams.squeezed(DEFAULT_THETA_S, HALF)):
                initial = atomic_contrast(params, omega, 0.0)
                for t in (0.1, 1.0, 10.0):
                    ratio = atomic_contrast(params, omega, gamma_closed(bath, t)) / initial
                    expected = (1 + (100.0 * t) ** 2) ** (-gamma0 * omega ** 2 / (2 * math.pi))
                    assert abs(ratio - expected) < 1e-12 * expected


def test_circular_stats_examples():
    grid = angle_grid(1024)
    uniform = circular_stats(PhaseDistribution(grid, np.full(1024, 1 / (2 * math.pi))))
    assert uniform.resultant_length < 1e-14
    assert abs(uniform.circular_variance - 1.0) < 1e-14
    assert uniform.mean_angle == 0.0

    cosine = circular_stats(PhaseDistribution(grid, (1 + np.cos(grid)) / (2 * math.pi)))
    assert abs(cosine.resultant_length - 0.5) < 1e-14
    assert circular_distance(cosine.mean_angle, 0.0) < 1e-12
    assert cosine.peak_angle == 0.0
    assert abs(cosine.peak_value - 1 / math.pi) < 1e-15


def test_isotropic_mean_angle_is_zero():
    vacuum = _coherent_dm(CoherentParams.from_alpha2(0.0))
    thermal = ReducedDensityMatrix(np.diag(poisson.pmf(np.arange(40), 3.0)), Basis.NUMBER)
    for rho in (vacuum, thermal, propagate(thermal, SystemSpec.harmonic(1.0), COLD_SQUEEZED, 0.3)):
        stats = circular_stats(oscillator_phase_distribution(rho, 512))
        assert stats.resultant_length < 1e-12
        assert stats.mean_angle == 0.0


def test_parabolic_peak_refinement():
    grid = angle_grid(64)
    centre = grid[10] + 0.3 * (2 * math.pi / 64)
    values = np.exp(4 * np.cos(grid - centre))
    values /= np.sum(values) * 2 * math.pi / 64
    stats = circular_stats(PhaseDistribution(grid, values))
    assert abs(stats.peak_angle - centre) < 0.1 * (2 * math.pi / 64)


def test_negative_values_rejected():
    grid = angle_grid(8)
    with pytest.raises(NumericalError):
        PhaseDistribution(grid, np.array([0.2, -1e-6, 0.2, 0.2, 0.2, 0.2, 0.2, 0.2]))
    clipped = PhaseDistribution(grid, np.array([0.2, -1e-13, 0.2, 0.2, 0.2, 0.2, 0.2, 0.2]))
    assert clipped.values.min() == 0.0


def test_wrap_angle():
    assert wrap_angle(-0.5) == 2 * math.pi - 0.5
    assert wrap_angle(2 * math.pi) == 0.0
    assert abs(circular_distance(0.1, 2 * math.pi - 0.1) - 0.2) < 1e-15


def test_unsupported_bases():
    with pytest.raises(ConfigurationError):
        oscillator_phase_distribution(atomic_initial_dm(AtomicStateParams.dicke(HALF)), 64)
    with pytest.raises(ConfigurationError):
        atomic_phase_distribution_general(_coherent_dm(), 64)
    coeffs = coherent_coeffs(BASE, 30)
    with pytest.raises(ConfigurationError):
        oscillator_phase_distribution([pure_state_dm(coeffs), split_sectors(coeffs)[0]], 64)


def test_anharmonic_number_basis_matches_harmonic():
    coeffs = kerr_coeffs(KerrParams(0.0, BASE), coherent_dimension(BASE))
    harmonic = oscillator_phase_distribution(
        propagate(pure_state_dm(coeffs), SystemSpec.harmonic(1.0), COLD_SQUEEZED, 0.1), 1024)
    anharmonic = oscillator_phase_distribution(
        propagate(pure_state_dm(coeffs), SystemSpec.anharmonic(1.0, 0.0), COLD_SQUEEZED, 0.1), 1024)
    assert np.max(np.abs(anharmonic.values - harmonic.values)) < 1e-10


def test_sector_sum_is_parity_symmetrized_harmonic():
    coeffs = kerr_coeffs(KerrParams(0.0, BASE), coherent_dimension(BASE))
    harmonic = oscillator_phase_distribution(
        propagate(pure_state_dm(coeffs), SystemSpec.harmonic(1.0), COLD_SQUEEZED, 0.1), 1024)
    spec = SystemSpec.anharmonic(1.0, 0.0)
    sectors = oscillator_phase_distribution(
        [propagate(s, spec, COLD_SQUEEZED, 0.1) for s in split_sectors(coeffs)], 1024)
    assert sectors.fold == 2
    symmetrized = 0.5 * (harmonic.values + np.roll(harmonic.values, -512))
    assert np.max(np.abs(sectors.values - symmetrized)) < 1e-10


def test_squeeze_limit_continuity():
    harmonic = SystemSpec.harmonic(1.0)
    anharmonic = SystemSpec.anharmonic(1.0, 0.02)
    kerr = KerrParams(0.02, BASE)
    coherent = oscillator_phase_distribution(propagate(_coherent_dm(), harmonic, COLD_SQUEEZED, 0.1), 512)
    twisted = oscillator_phase_distribution(
        propagate(pure_state_dm(kerr_coeffs(kerr, coherent_dimension(BASE))), anharmonic, COLD_SQUEEZED, 0.1), 512)
    # 一阶小量: r1 = 1e-3 时偏差 < 1e-3，并按 r1 线性缩小
    for r1 in (1e-3, 1e-5):
        squeezed = oscillator_phase_distribution(
            propagate(squeezed_coherent_dm(BASE, SqueezeParams(r1)), harmonic, COLD_SQUEEZED, 0.1), 512)
        assert np.max(np.abs(squeezed.values - coherent.values)) < r1
        squeezed_kerr = oscillator_phase_distribution(
            propagate(pure_state_dm(squeezed_kerr_coeffs(kerr, SqueezeParams(r1))), anharmonic, COLD_SQUEEZED, 0.1),
            512)
        assert np.max(np.abs(squeezed_kerr.values - twisted.values)) < r1


def test_fig1_broadening_ordinals():
    stats = _preset_stats("fig1")
    var = {name: s.circular_variance for name, (_, s, _) in stats.items()}
    assert var["T300-r2-t0.1"] > var["T0-r2-t0.1"]
    assert var["T300-r2-t0.1"] > var["T300-r1-t0.1"]
    assert var["T300-r1-t0.2"] > var["T300-r1-t0.1"]
    assert var["T0-r2-t0.1"] > var["unitary"]


def test_fig2_broadening_and_tilt():
    stats = _preset_stats("fig2")
    var = {name: s.circular_variance for name, (_, s, _) in stats.items()}
    assert var["T300-r2-t0.1"] > var["T0-r2-t0.1"]
    assert var["T300-r2-t0.1"] > var["T300-r1-t0.1"]
    assert var["T300-r1-t0.2"] > var["T300-r1-t0.1"]

    # 幺正演化 t = 0.1 时，压缩相干态峰位偏离 θ₀ 更远
    squeezed_offset = circular_distance(stats["unitary"][1].peak_angle, 0.0)
    coherent_offset = circular_distance(_preset_stats("fig1")["unitary"][1].peak_angle, 0.0)
    assert squeezed_offset > coherent_offset


def test_fig6_broadening_ordinals():
    stats = _preset_stats("fig6")
    var = {name: s.circular_variance for name, (_, s, _) in stats.items()}
    assert var["T300-r2-t0.1"] > var["T0-r2-t0.1"]
    assert var["T0-r2-t0.1"] > var["T0-r0-t0.1"]
    assert var["T300-r2-t0.1"] > var["T300-r2-t0.02"]


def test_fig4_peak_drift():
    results = compute_scenarios(preset_scenarios("fig4", {"anharmonic_basis": "number"}))
    assert [t for _, t, _ in results] == [0.1, 0.5, 1.0]
    peaks = [circular_stats(pd).peak_angle for _, _, pd in results]
    steps = [math.remainder(b - a, 2 * math.pi) for a, b in zip(peaks, peaks[1:])]
    assert all(step < 0 for step in steps) or all(step > 0 for step in steps)
    assert min(abs(step) for step in steps) > 0.1


def test_multi_peak_signature():
    for _, (_, _, pd) in _preset_stats("fig3").items():
        assert pd.fold == 2
        assert count_local_maxima(pd) >= 2
    unitary = _preset_stats("fig1")["unitary"][2]
    assert count_local_maxima(unitary) == 1


def main():
    tests = [(name, fn) for name, fn in globals().items() if name.startswith("test_") and callable(fn)]
    failed = 0
    for name, fn in tests:
        try:
            fn()
            print(f"✅ {name}")
        except Exception as e:
            failed += 1
            print(f"❌ {name}: {e!r}")
    print(f"\n总计: {len(tests)}, 成功: {len(tests) - failed}, 失败: {failed}")
    sys.exit(0 if failed == 0 else 1)


if __name__ == "__main__":
    main()
