import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relational_epr.hilbert import (
    StateVector,
    born_probabilities,
    diagonal_observable,
    is_eigenstate,
    lift,
    partial_trace,
    project_collapse,
    schmidt_coefficients,
    spin_observable,
)
from relational_epr.relational import (
    EPSILON,
    HiddenOutcomeError,
    IncompatibleMeasurementError,
    LedgerError,
    MeasurementRecord,
    MissingStateError,
    SystemId,
    check_consistency,
    correlation_operator,
    describe_interaction,
    measurement_setup,
    measurement_unitary,
    observe,
    pointer_observable,
)

Q = diagonal_observable([1.0, 2.0])  # q1 = 1, q2 = 2
SO = SystemId.of("O", "S")
T1, T2 = 1.0, 2.0


def run_sequences(alpha, forced=2.0, seed=0):
    """O measures Q on S at T2; O' only describes the interaction."""
    ledger = measurement_setup(alpha, Q, T1)
    observe(ledger, "O", "S", Q, T2, rng=np.random.default_rng(seed), forced_outcome=forced)
    describe_interaction(ledger, "O'", "O", "S", Q, T2)
    return ledger


def angle_alphas():
    return st.floats(0.05, np.pi / 2 - 0.05).map(lambda th: (np.cos(th), np.sin(th)))


class TestSystemIds:
    def test_composite(self):
        assert SO.name == "O+S" and SO.is_composite
        with pytest.raises(ValueError):
            SystemId(("S", "S"))


class TestLedger:
    def test_query_before_any_entry(self):
        ledger = measurement_setup((0.6, 0.8), Q, T1)
        with pytest.raises(MissingStateError):
            ledger.state_of("O", "S", T1 - 0.5)

    def test_ties_rejected(self):
        ledger = measurement_setup((0.6, 0.8), Q, T1)
        with pytest.raises(LedgerError, match="already holds"):
            ledger.add_state("O", "S", T1, StateVector([1, 0]))

    def test_unknown_names_rejected(self):
        ledger = measurement_setup((0.6, 0.8), Q, T1)
        with pytest.raises(LedgerError, match="observer"):
            ledger.add_state("nobody", "S", 3.0, StateVector([1, 0]))
        with pytest.raises(LedgerError, match="system"):
            ledger.add_state("O", "X", 3.0, StateVector([1, 0]))
        with pytest.raises(LedgerError, match="dim"):
            ledger.add_state("O", "S", 3.0, StateVector([1, 0, 0, 0]))

    def test_non_finite_time(self):
        ledger = measurement_setup((0.6, 0.8), Q, T1)
        with pytest.raises(LedgerError):
            ledger.add_state("O", "S", float("inf"), StateVector([1, 0]))

    def test_record_outcome_validated(self):
        with pytest.raises(LedgerError, match="zero probability"):
            MeasurementRecord("O", 2.0, Q, SystemId.of("S"), StateVector([1, 0]), 2.0)
        with pytest.raises(ValueError, match="eigenvalue"):
            MeasurementRecord("O", 2.0, Q, SystemId.of("S"), StateVector([1, 0]), 3.0)

    def test_hidden_outcomes(self):
        ledger = run_sequences((0.6, 0.8))
        (record,) = ledger.records("O", "S")
        assert ledger.read_outcome(record, "O") == 2.0
        with pytest.raises(HiddenOutcomeError):
            ledger.read_outcome(record, "O'")
        ledger.interact("O", "O'", T2 + 1)
        assert ledger.read_outcome(record, "O'") == 2.0


class TestObserve:
    def test_forced_collapse(self):
        ledger = run_sequences((0.6, 0.8))
        np.testing.assert_allclose(ledger.state_of("O", "S", T2).amplitudes, [0, 1], atol=1e-15)

    def test_eigenstate_is_certain(self):
        for seed in range(20):
            ledger = measurement_setup((0, 1), Q, T1)
            outcome, _ = observe(ledger, "O", "S", Q, T2, rng=np.random.default_rng(seed))
            assert outcome == 2.0
            assert ledger.state_of("O", "S", T2).allclose(StateVector([0, 1]))

    def test_other_observers_untouched(self):
        ledger = run_sequences((0.6, 0.8))
        np.testing.assert_allclose(ledger.state_of("O'", "S", T2).amplitudes, [0.6, 0.8])
        np.testing.assert_allclose(ledger.state_of("O'", SO, T2).amplitudes, [0.6, 0, 0, 0.8], atol=1e-15)

    def test_missing_state(self):
        ledger = measurement_setup((0.6, 0.8), Q, T1)
        with pytest.raises(MissingStateError):
            observe(ledger, "O", "O", Q, T2, rng=np.random.default_rng(0))

    def test_sampled_statistics(self):
        hits = 0
        for seed in range(2000):
            ledger = measurement_setup((0.6, 0.8), Q, T1)
            outcome, _ = observe(ledger, "O", "S", Q, T2, rng=np.random.default_rng(seed))
            hits += outcome == 1.0
        # sd of the frequency at n=2000 is ~0.011
        assert abs(hits / 2000 - 0.36) < 0.05

    @settings(max_examples=30, deadline=None)
    @given(angle_alphas(), st.integers(0, 10_000))
    def test_observe_only_writes_own_entries(self, alpha, seed):
        ledger = measurement_setup(alpha, Q, T1)
        describe_interaction(ledger, "O'", "O", "S", Q, T2)
        snapshot = [(e.key, id(e)) for e in ledger.entries if getattr(e, "observer", None) == "O'"]
        observe(ledger, "O", "S", Q, T2 + 1, rng=np.random.default_rng(seed))
        after = [(e.key, id(e)) for e in ledger.entries if getattr(e, "observer", None) == "O'"]
        assert snapshot == after


class TestDescribeInteraction:
    def test_entangled_state(self):
        a1, a2 = 0.6, 0.8j
        ledger = measurement_setup((a1, a2), Q, T1)
        describe_interaction(ledger, "O'", "O", "S", Q, T2)
        np.testing.assert_allclose(ledger.state_of("O'", SO, T2).amplitudes, [a1, 0, 0, a2], atol=1e-15)
        # the product premeasurement state is logged at T1
        np.testing.assert_allclose(ledger.state_of("O'", SO, T1).amplitudes, [a1, a2, 0, 0], atol=1e-15)

    def test_eigenstate_input_gives_product(self):
        ledger = measurement_setup((1, 0), Q, T1)
        describe_interaction(ledger, "O'", "O", "S", Q, T2)
        np.testing.assert_allclose(ledger.state_of("O'", SO, T2).amplitudes, [1, 0, 0, 0], atol=1e-15)

    def test_reduced_system_state(self):
        ledger = measurement_setup((0.6, 0.8), Q, T1)
        describe_interaction(ledger, "O'", "O", "S", Q, T2)
        rho = partial_trace(ledger.state_of("O'", SO, T2), 1, (2, 2))
        np.testing.assert_allclose(rho.entries, np.diag([0.36, 0.64]), atol=1e-12)

    def test_missing_prerequisite(self):
        ledger = measurement_setup((0.6, 0.8), Q, T1)
        with pytest.raises(MissingStateError):
            describe_interaction(ledger, "O", "O'", "S", Q, T2)

    @settings(max_examples=50, deadline=None)
    @given(st.complex_numbers(max_magnitude=1, allow_nan=False), st.complex_numbers(max_magnitude=1, allow_nan=False))
    def test_unitary_for_any_ready_state(self, a, b):
        if abs(a) + abs(b) < 1e-3:
            return
        psi = StateVector.normalized([a, b])
        u = measurement_unitary(psi, Q)
        np.testing.assert_allclose(u.conj().T @ u, np.eye(4), atol=1e-12)
        for i in range(2):
            phi = np.eye(2)[i]
            np.testing.assert_allclose(u @ np.kron(psi.amplitudes, phi), np.kron(np.eye(2)[i], phi), atol=1e-12)


class TestCorrelationOperator:
    @pytest.mark.parametrize(
        "pointer, system, eigenvalue",
        [(0, 0, 1.0), (1, 1, 1.0), (0, 1, 0.0), (1, 0, 0.0)],
    )
    def test_displayed_relations(self, pointer, system, eigenvalue):
        vec = np.kron(np.eye(2)[pointer], np.eye(2)[system])
        np.testing.assert_allclose(correlation_operator().entries @ vec, eigenvalue * vec, atol=1e-12)

    def test_matrix_form(self):
        np.testing.assert_array_equal(correlation_operator().entries, np.diag([1, 0, 0, 1]))

    def test_rotated_q_basis(self):
        sx = spin_observable((1, 0, 0))
        C = correlation_operator(2, 2, sx)
        for i, value in enumerate(sx.eigenvalues):
            vec = np.kron(np.eye(2)[i], sx.eigenspace(value)[:, 0])
            np.testing.assert_allclose(C.entries @ vec, vec, atol=1e-12)

    def test_commutes_with_lifted_q(self):
        C = correlation_operator(2, 2, Q)
        assert C.commutes_with(lift(Q, 1, [2, 2]))
        assert C.commutes_with(lift(pointer_observable(Q), 0, [2, 2]))


class TestConsistency:
    def test_holds_for_eq3_state(self):
        ledger = run_sequences((0.6, 0.8))
        assert check_consistency(ledger, "O", "O'", "S", Q, np.random.default_rng(1), trials=1000)

    def test_does_not_write(self):
        ledger = run_sequences((0.6, 0.8))
        n = len(ledger.entries)
        check_consistency(ledger, "O", "O'", "S", Q, np.random.default_rng(1), trials=10)
        assert len(ledger.entries) == n

    def test_sequential_form_is_certain(self):
        ledger = run_sequences((0.6, 0.8), forced=2.0)
        joint = ledger.state_of("O'", SO, T2)
        # O' learns by interaction that the pointer reads q2
        informed = project_collapse(joint, lift(pointer_observable(Q), 0, [2, 2]), 2.0)
        assert born_probabilities(informed, lift(Q, 1, [2, 2]))[2.0] == pytest.approx(1.0, abs=1e-12)

    def test_flipped_record_fails(self):
        ledger = measurement_setup((0.6, 0.8), Q, T1)
        ledger.add_state("O", "S", T2, StateVector([0, 1]))
        ledger.add_record(MeasurementRecord("O", T2, Q, SystemId.of("S"), StateVector([0.6, 0.8]), 1.0))
        describe_interaction(ledger, "O'", "O", "S", Q, T2)
        assert not check_consistency(ledger, "O", "O'", "S", Q, np.random.default_rng(0), trials=100)

    def test_miswired_pointer_fails(self):
        ledger = run_sequences((0.6, 0.8))
        # O' holds a state in which the pointer always reads the wrong value
        ledger.add_state("O'", SO, T2 + 0.5, StateVector([0, 0.6, 0.8, 0]))
        assert not check_consistency(ledger, "O", "O'", "S", Q, np.random.default_rng(0), trials=100)

    def test_missing_record(self):
        ledger = measurement_setup((0.6, 0.8), Q, T1)
        describe_interaction(ledger, "O'", "O", "S", Q, T2)
        with pytest.raises(MissingStateError):
            check_consistency(ledger, "O", "O'", "S", Q, np.random.default_rng(0))

    def test_incompatible_intermediate_measurement_rejected(self):
        ledger = run_sequences((0.6, 0.8))
        sx = spin_observable((1, 0, 0))
        observe(ledger, "O", "S", sx, T2 + 0.25, rng=np.random.default_rng(0))
        with pytest.raises(IncompatibleMeasurementError):
            check_consistency(ledger, "O", "O'", "S", Q, np.random.default_rng(0), time=T2 + 1)

    @settings(max_examples=100, deadline=None)
    @given(angle_alphas(), st.integers(0, 2**32 - 1))
    def test_random_scenarios(self, alpha, seed):
        rng = np.random.default_rng(seed)
        ledger = measurement_setup(alpha, Q, T1)
        observe(ledger, "O", "S", Q, T2, rng=rng)
        describe_interaction(ledger, "O'", "O", "S", Q, T2)
        assert check_consistency(ledger, "O", "O'", "S", Q, rng, trials=50)


@settings(max_examples=50, deadline=None)
@given(angle_alphas(), st.sampled_from([1.0, 2.0]))
def test_ledger_divergence(alpha, outcome):
    ledger = run_sequences(alpha, forced=outcome)
    assert is_eigenstate(ledger.state_of("O", "S", T2), Q) == outcome
    coeffs = schmidt_coefficients(ledger.state_of("O'", SO, T2), (2, 2))
    assert np.all(coeffs > 1e-6)
    np.testing.assert_allclose(sorted(coeffs), sorted(np.abs(alpha)), atol=1e-12)
    assert ledger.state_of("O'", SO, T2 + EPSILON) is ledger.state_of("O'", SO, T2)
