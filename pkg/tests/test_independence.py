"""Tests for chi-square independence testing and graph audits."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from crlscore.independence import (
    audit_graph_against_data,
    chi2_independence,
    chi2_p_value,
    enforce_independence,
)
from crlscore.log import collect_warnings
from crlscore.model import (
    CausalGraph,
    DataTable,
    DegenerateError,
    ValidationError,
    VariableSpec,
    fixture_path,
    load_graph,
)
from crlscore.scm import Mechanism, Scm, sample


def binary_table(**columns):
    specs = {name: VariableSpec(name, "categorical", 2) for name in columns}
    return DataTable.from_columns(
        {name: np.asarray(col, dtype=np.int64) for name, col in columns.items()},
        specs,
    )


def two_by_two(a, b, c, d):
    """Rows giving the contingency table [[a, b], [c, d]] over (x, y)."""
    x = [0] * (a + b) + [1] * (c + d)
    y = [0] * a + [1] * b + [0] * c + [1] * d
    return x, y


def noisy_copy(rng, source, flip):
    return np.where(rng.random(source.size) < flip, 1 - source, source)


class TestChi2:
    """Tests for the Pearson chi-square test."""

    def test_hand_computed_table(self):
        """Test the statistic and degrees of freedom of a 2x2 table."""
        x, y = two_by_two(30, 10, 10, 30)
        result = chi2_independence(binary_table(x=x, y=y), "x", "y")
        assert result.statistic == pytest.approx(20.0)
        assert result.dof == 1
        assert result.dependent

    def test_p_value_matches_scipy(self):
        """Test the survival function against scipy.stats."""
        for statistic, dof in [(0.5, 1), (3.84, 1), (20.0, 1), (7.0, 4)]:
            assert chi2_p_value(statistic, dof) == pytest.approx(
                stats.chi2.sf(statistic, dof)
            )

    def test_independent_table(self):
        """Test that a product table has statistic zero."""
        x, y = two_by_two(20, 20, 20, 20)
        result = chi2_independence(binary_table(x=x, y=y), "x", "y")
        assert result.statistic == pytest.approx(0.0)
        assert result.p_value == pytest.approx(1.0)
        assert not result.dependent

    def test_strata_sum(self):
        """Test that conditional statistics and dof add over strata."""
        x, y = two_by_two(30, 10, 10, 30)
        data = binary_table(x=x * 2, y=y * 2, z=[0] * 80 + [1] * 80)
        result = chi2_independence(data, "x", "y", ["z"])
        assert result.statistic == pytest.approx(40.0)
        assert result.dof == 2

    def test_constant_stratum_skipped(self):
        """Test that a stratum without variation in x adds nothing."""
        x, y = two_by_two(30, 10, 10, 30)
        data = binary_table(
            x=x + [0] * 10, y=y + [0] * 5 + [1] * 5, z=[0] * 80 + [1] * 10
        )
        result = chi2_independence(data, "x", "y", ["z"])
        assert result.statistic == pytest.approx(20.0)
        assert result.dof == 1

    @settings(max_examples=60, deadline=None)
    @given(*[st.integers(1, 60)] * 4)
    def test_two_by_two_closed_form(self, a, b, c, d):
        """Test n (ad - bc)^2 over the product of the margins."""
        x, y = two_by_two(a, b, c, d)
        result = chi2_independence(binary_table(x=x, y=y), "x", "y")
        n = a + b + c + d
        expected = n * (a * d - b * c) ** 2 / ((a + b) * (c + d) * (a + c) * (b + d))
        assert result.statistic == pytest.approx(expected)
        assert result.dof == 1

    def test_null_rejection_rate(self):
        """Test that independent data is rejected at about the nominal rate."""
        rejected = 0
        for seed in range(1000):
            rng = np.random.default_rng(seed)
            data = binary_table(x=rng.integers(0, 2, 400), y=rng.integers(0, 2, 400))
            rejected += chi2_independence(data, "x", "y", alpha=0.05).dependent
        assert 25 <= rejected <= 75

    def test_low_expected_counts_warn(self):
        """Test that sparse tables produce a warning."""
        x, y = two_by_two(3, 1, 1, 3)
        with collect_warnings() as warnings:
            result = chi2_independence(binary_table(x=x, y=y), "x", "y")
        assert result.low_expected_cells == 4
        assert any("expected cells" in w for w in warnings)

    def test_single_level_is_degenerate(self):
        """Test that a constant variable cannot be tested."""
        data = binary_table(x=[0, 0, 0, 0], y=[0, 1, 0, 1])
        with pytest.raises(DegenerateError):
            chi2_independence(data, "x", "y")

    def test_single_row_is_degenerate(self):
        """Test that one row carries no degrees of freedom."""
        data = binary_table(x=[0], y=[1])
        with pytest.raises(DegenerateError):
            chi2_independence(data, "x", "y")

    def test_numeric_column_rejected(self):
        """Test that numeric columns must be discretized first."""
        data = DataTable.from_columns(
            {"x": np.array([0, 1, 0, 1]), "y": [0.1, 0.2, 0.3, 0.4]}
        )
        with pytest.raises(ValidationError, match="discretize"):
            chi2_independence(data, "x", "y")

    def test_alpha_range(self):
        """Test that alpha must lie strictly between 0 and 1."""
        x, y = two_by_two(5, 5, 5, 5)
        with pytest.raises(ValidationError):
            chi2_independence(binary_table(x=x, y=y), "x", "y", alpha=1.0)

    def test_overlapping_variables(self):
        """Test that x may not be in the conditioning set."""
        x, y = two_by_two(5, 5, 5, 5)
        with pytest.raises(ValidationError):
            chi2_independence(binary_table(x=x, y=y), "x", "y", ["x"])


class TestAudit:
    """Tests for auditing a graph against data."""

    def test_chain_data_consistent(self):
        """Test that data sampled from a chain agrees with the chain."""
        rng = np.random.default_rng(7)
        a = rng.integers(0, 2, 4000)
        b = noisy_copy(rng, a, 0.1)
        c = noisy_copy(rng, b, 0.1)
        g = CausalGraph.from_names(
            [VariableSpec(n, "categorical", 2) for n in "ABC"],
            [("A", "B"), ("B", "C")],
        )
        report = audit_graph_against_data(
            g, binary_table(A=a, B=b, C=c), max_conditioning=1, alpha=0.001
        )
        keys = [(e.x, e.y, e.given, e.expected) for e in report.entries]
        assert keys == [
            ("A", "B", (), "dependent"),
            ("A", "C", ("B",), "independent"),
            ("B", "C", (), "dependent"),
        ]
        assert report.violation_rate == 0.0

    def test_hidden_common_cause_detected(self):
        """Test that a hidden cause of age and gender breaks their independence."""
        rng = np.random.default_rng(11)
        n = 3000
        hidden = rng.integers(0, 2, n)
        age = noisy_copy(rng, hidden, 0.1)
        gender = noisy_copy(rng, hidden, 0.1)
        beard = noisy_copy(rng, age, 0.2)
        bald = np.where(rng.random(n) < 0.2, 1 - (age & gender), age & gender)
        data = binary_table(age=age, gender=gender, beard=beard, bald=bald)

        report = audit_graph_against_data(
            load_graph(fixture_path("celeba_beard.json")), data, max_conditioning=1
        )
        marginal = [
            e for e in report.entries if (e.x, e.y, e.given) == ("age", "gender", ())
        ]
        assert len(marginal) == 1
        assert marginal[0].expected == "independent"
        assert not marginal[0].consistent
        assert marginal[0] in report.violations
        assert report.violation_rate > 0.0

    def test_hidden_cause_from_scm_samples(self):
        """Test that a latent common cause is caught on nearly every seed."""
        binary = {n: VariableSpec(n, "categorical", 2) for n in "AB"}
        hidden = VariableSpec("H", "categorical", 2, observed=False)
        effect = Mechanism(kind="categorical", logits=((0.0, 0.0), (-1.5, 3.0)))
        scm = Scm(
            CausalGraph.from_names(
                [hidden, binary["A"], binary["B"]], [("H", "A"), ("H", "B")]
            ),
            {"A": effect, "B": effect},
        )
        claimed = CausalGraph.from_names(list(binary.values()), [])
        detected = 0
        for seed in range(100):
            data = sample(scm, 500, seed=seed)
            report = audit_graph_against_data(claimed, data, max_conditioning=0)
            detected += bool(report.violations)
        assert detected >= 95

    def test_missing_column(self):
        """Test that every observed variable needs a column."""
        g = CausalGraph.from_names(
            [VariableSpec(n, "categorical", 2) for n in "AB"], [("A", "B")]
        )
        with pytest.raises(ValidationError, match="no column"):
            audit_graph_against_data(g, binary_table(A=[0, 1]))


class TestEnforceIndependence:
    """Tests for the independent-subsample filter."""

    def test_product_of_marginals(self):
        """Test that the kept rows form a product table."""
        x, y = two_by_two(30, 10, 10, 30)
        data = binary_table(x=x, y=y)
        kept = enforce_independence(data, "x", "y", seed=0)
        assert kept.n_rows == 40
        result = chi2_independence(kept, "x", "y")
        assert result.statistic == pytest.approx(0.0)

    def test_seed_reproducible(self):
        """Test that the same seed keeps the same rows."""
        x, y = two_by_two(30, 10, 10, 30)
        data = DataTable.from_columns(
            {
                "x": np.asarray(x),
                "y": np.asarray(y),
                "row": np.arange(80, dtype=float),
            },
        )
        first = enforce_independence(data, "x", "y", seed=3).column("row")
        second = enforce_independence(data, "x", "y", seed=3).column("row")
        assert first.tolist() == second.tolist()
        assert first.tolist() == sorted(first.tolist())

    def test_independent_counts_unchanged(self):
        """Test that an exact product table is kept whole."""
        x, y = two_by_two(25, 25, 25, 25)
        kept = enforce_independence(binary_table(x=x, y=y), "x", "y", seed=0)
        assert kept.n_rows == 100

    def test_empty_cell_is_degenerate(self):
        """Test that a never-observed level pair has no independent subsample."""
        x, y = two_by_two(10, 0, 5, 5)
        with pytest.raises(DegenerateError):
            enforce_independence(binary_table(x=x, y=y), "x", "y", seed=0)
