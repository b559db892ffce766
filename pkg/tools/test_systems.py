"""
体系谱与 QND 传播子测试: 能级、传播后的厄米性与迹、主方程有限差分、λ = 0 约化。

用法:
  - pytest tools/test_systems.py
  - python tools/test_systems.py
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

from core.bath.kernels import BathParams, KernelPair, TemperatureRegime, gamma_closed, kernel_rates, kernels
from core.errors import ConfigurationError, DomainError, UsageError
from core.states.oscillator import CoherentParams, coherent_coeffs, merge_sectors, pure_state_dm, split_sectors
from core.systems.propagator import ReducedDensityMatrix, master_equation_rhs, phase_factors, propagate
from core.systems.spectra import Basis, SystemSpec, dicke_projection, energies, energy


COLD_SQUEEZED = BathParams(0.0025, 100.0, 0.0, 2.0, 0.0, TemperatureRegime.ZERO_TEMPERATURE)
HOT = BathParams(0.0025, 100.0, 300.0, 1.0, 0.0, TemperatureRegime.HIGH_TEMPERATURE)
UNITARY = BathParams(0.0, 100.0, 0.0, 0.0, 0.0, TemperatureRegime.ZERO_TEMPERATURE)


def _coherent_dm(N=60):
    return pure_state_dm(coherent_coeffs(CoherentParams.from_alpha2(5.0), N))


def test_energy_examples():
    assert energy(SystemSpec.harmonic(1.0), Basis.NUMBER, 0) == 0.5
    assert abs(energy(SystemSpec.anharmonic(1.0, 0.02), Basis.SU11_EVEN, 2) - 4.62) < 1e-14
    assert energy(SystemSpec.two_level(1.0), Basis.DICKE_J_HALF, 1) == 0.5
    assert energy(SystemSpec.two_level(1.0), Basis.DICKE_J_HALF, 0) == -0.5
    assert dicke_projection(0) == Fraction(-1, 2)


def test_anharmonic_number_basis_spectrum():
    # H = ω(a†a + ½) + (λ/2)a†²a² 在数态基下对角
    spec = SystemSpec.anharmonic(1.3, 0.02)
    n = np.arange(20)
    hamiltonian = np.diag(1.3 * (n + 0.5) + 0.01 * n * (n - 1))
    expected = np.linalg.eigvalsh(hamiltonian)
    assert np.max(np.abs(energies(spec, Basis.NUMBER, 20) - expected)) < 1e-12

    even = energies(spec, Basis.SU11_EVEN, 10)
    odd = energies(spec, Basis.SU11_ODD, 10)
    assert np.max(np.abs(even - expected[0::2])) < 1e-12
    assert np.max(np.abs(odd - expected[1::2])) < 1e-12


def test_spec_validation():
    with pytest.raises(ConfigurationError):
        SystemSpec(kind="harmonic", omega=1.0, lam=0.02)
    with pytest.raises(ConfigurationError):
        SystemSpec(kind="anharmonic", omega=1.0)
    with pytest.raises(DomainError):
        SystemSpec.harmonic(0.0)
    with pytest.raises(ConfigurationError):
        energy(SystemSpec.harmonic(1.0), Basis.DICKE_J_HALF, 0)
    with pytest.raises(ConfigurationError):
        energy(SystemSpec.two_level(1.0), Basis.NUMBER, 0)
    with pytest.raises(DomainError):
        energy(SystemSpec.two_level(1.0), Basis.DICKE_J_HALF, 2)


def test_unitary_preserves_magnitudes():
    rho0 = _coherent_dm()
    rho = propagate(rho0, SystemSpec.harmonic(1.0), UNITARY, 0.5)
    assert np.max(np.abs(np.abs(rho.entries) - np.abs(rho0.entries))) < 1e-15
    assert rho.t == 0.5


def test_diagonal_untouched():
    rho0 = ReducedDensityMatrix(np.diag([0.5, 0.3, 0.2]), Basis.NUMBER)
    for bath in (COLD_SQUEEZED, HOT):
        rho = propagate(rho0, SystemSpec.harmonic(1.0), bath, 0.2)
        assert np.array_equal(rho.entries, rho0.entries)


def test_coherent_decoherence_factor():
    rho0 = _coherent_dm()
    rho = propagate(rho0, SystemSpec.harmonic(1.0), COLD_SQUEEZED, 0.1)
    ratio = abs(rho.entries[0, 1]) / abs(rho0.entries[0, 1])
    assert abs(ratio - math.exp(-gamma_closed(COLD_SQUEEZED, 0.1))) < 1e-14
    assert rho.diagnostics["gamma"] == gamma_closed(COLD_SQUEEZED, 0.1)


def test_hermiticity_and_trace_after_propagation():
    coeffs = coherent_coeffs(CoherentParams.from_alpha2(5.0, 0.3), 60)
    even, odd = split_sectors(coeffs)
    cases = [
        (pure_state_dm(coeffs), SystemSpec.harmonic(1.0)),
        (pure_state_dm(coeffs), SystemSpec.anharmonic(1.0, 0.02)),
        (even, SystemSpec.anharmonic(1.0, 0.02)),
        (odd, SystemSpec.anharmonic(1.0, 0.02)),
        (ReducedDensityMatrix(np.array([[0.6, 0.3 - 0.2j], [0.3 + 0.2j, 0.4]]), Basis.DICKE_J_HALF),
         SystemSpec.two_level(1.0)),
    ]
    for rho0, spec in cases:
        for bath in (COLD_SQUEEZED, HOT):
            rho = propagate(rho0, spec, bath, 0.2)
            assert rho.hermiticity_error() < 1e-12
            assert abs(rho.trace - rho0.trace) < 1e-14
    assert abs(even.trace + odd.trace - 1.0) < 1e-10


def test_decoherence_factor_bounded():
    spec = SystemSpec.anharmonic(1.0, 0.02)
    for bath in (COLD_SQUEEZED, HOT):
        for t in (0.05, 0.5, 2.0):
            pair = kernels(bath, t)
            assert pair.gamma >= 0
            factors = phase_factors(spec, Basis.NUMBER, 30, t, pair)
            assert np.max(np.abs(factors)) <= 1.0 + 1e-15


def test_master_equation_finite_difference():
    spec = SystemSpec.harmonic(1.0)
    rho0 = pure_state_dm(coherent_coeffs(CoherentParams.from_alpha2(5.0), 6))
    delta = 1e-5
    for bath in (COLD_SQUEEZED, HOT):
        for t in (0.05, 0.1, 0.2):
            plus = propagate(rho0, spec, bath, t + delta).entries
            minus = propagate(rho0, spec, bath, t - delta).entries
            finite_difference = (plus - minus) / (2 * delta)
            rhs = master_equation_rhs(propagate(rho0, spec, bath, t), spec, kernel_rates(bath, t, delta))
            assert np.max(np.abs(finite_difference - rhs)) <= 1e-5 * np.max(np.abs(rhs))


def test_lambda_zero_sector_reduction():
    coeffs = coherent_coeffs(CoherentParams.from_alpha2(5.0, 0.7), 60)
    even, odd = split_sectors(coeffs)
    anharmonic = SystemSpec.anharmonic(1.0, 0.0)
    harmonic = propagate(pure_state_dm(coeffs), SystemSpec.harmonic(1.0), COLD_SQUEEZED, 0.1)
    merged = merge_sectors(propagate(even, anharmonic, COLD_SQUEEZED, 0.1),
                           propagate(odd, anharmonic, COLD_SQUEEZED, 0.1))

    same_parity = np.add.outer(np.arange(60), np.arange(60)) % 2 == 0
    assert np.max(np.abs(merged.entries[same_parity] - harmonic.entries[same_parity])) < 1e-12
    assert np.all(merged.entries[~same_parity] == 0)

    number = propagate(pure_state_dm(coeffs), anharmonic, COLD_SQUEEZED, 0.1)
    assert np.max(np.abs(number.entries - harmonic.entries)) < 1e-12


def test_propagate_requires_initial_matrix():
    rho = propagate(_coherent_dm(10), SystemSpec.harmonic(1.0), HOT, 0.1)
    with pytest.raises(UsageError):
        propagate(rho, SystemSpec.harmonic(1.0), HOT, 0.1)


def test_explicit_kernel_pair():
    rho0 = _coherent_dm(10)
    pair = KernelPair(eta=0.0, gamma=0.0)
    rho = propagate(rho0, SystemSpec.harmonic(1.0), HOT, 0.3, pair=pair)
    expected = propagate(rho0, SystemSpec.harmonic(1.0), UNITARY, 0.3)
    assert np.max(np.abs(rho.entries - expected.entries)) < 1e-15


def test_density_matrix_is_immutable():
    rho = _coherent_dm(5)
    with pytest.raises(ValueError):
        rho.entries[0, 0] = 0.0


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
