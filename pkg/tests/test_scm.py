"""Tests for the structural causal model simulator and the pendulum oracle."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crlscore.generation import counterfactual_accuracy
from crlscore.independence import chi2_independence
from crlscore.model import (
    CausalGraph,
    CycleError,
    InconsistentObservationError,
    SchemaError,
    ValidationError,
    VariableSpec,
    discretize,
    fixture_path,
    load_graph,
)
from crlscore.scm import (
    RASTER_SIZE,
    ROD_WIDTH,
    SHADOW_ROWS,
    Mechanism,
    Noise,
    Scm,
    abduct,
    counterfactual,
    intervene,
    load_scm,
    parse_assignments,
    pendulum_counterfactual_pairs,
    pendulum_graph,
    pendulum_table,
    render_pendulum,
    sample,
    sample_pendulum,
    write_scm,
)

finite = st.floats(-5.0, 5.0, allow_nan=False)


def linear(noise=None, bias=0.0, **weights):
    return Mechanism(
        weights=tuple(sorted(weights.items())),
        bias=bias,
        noise=noise or Noise(),
    )


def chain_scm():
    return load_scm(fixture_path("chain_scm.json"))


def graph(names, edges):
    return CausalGraph.from_names(names, edges)


class TestScmConstruction:
    """Tests for model validation."""

    def test_fixture_loads(self):
        """Test the bundled chain model."""
        scm = chain_scm()
        assert scm.order == ["A", "B", "C"]
        assert scm.mechanism("B").weights == (("A", 2.0),)

    def test_parents_must_match(self):
        """Test that weights name exactly the graph parents."""
        g = graph(["A", "B"], [("A", "B")])
        with pytest.raises(SchemaError, match="parents"):
            Scm(g, {"B": linear()})

    def test_unknown_node(self):
        """Test that mechanisms must belong to graph nodes."""
        g = graph(["A"], [])
        with pytest.raises(ValidationError, match="unknown nodes"):
            Scm(g, {"Q": linear()})

    def test_categorical_mechanism_on_numeric(self):
        """Test that categorical mechanisms need categorical nodes."""
        g = graph(["A"], [])
        with pytest.raises(SchemaError):
            Scm(g, {"A": Mechanism(kind="categorical", logits=((0.0,), (0.0,)))})

    def test_logit_rows(self):
        """Test that a categorical node needs one logit row per level."""
        g = CausalGraph.from_names([VariableSpec("Z", "categorical", 3)], [])
        with pytest.raises(SchemaError, match="logit rows"):
            Scm(g, {"Z": Mechanism(kind="categorical", logits=((0.0,), (0.0,)))})

    def test_cycle(self):
        """Test that cyclic graphs are refused."""
        g = graph(["A", "B"], [("A", "B"), ("B", "A")])
        with pytest.raises(CycleError):
            Scm(g, {})

    def test_bad_noise(self):
        """Test that gaussian noise needs a positive sigma."""
        with pytest.raises(SchemaError):
            Noise("gaussian", sigma=0.0)


class TestSampling:
    """Tests for ancestral sampling."""

    def test_zero_noise_closed_form(self):
        """Test a constant root feeding a noise-free linear child."""
        scm = Scm(
            graph(["A", "B"], [("A", "B")]),
            {"A": Mechanism.constant(3.0), "B": linear(Noise("none"), 1.0, A=2.0)},
        )
        data = sample(scm, 50, seed=1)
        assert data.column("B").tolist() == [7.0] * 50

    def test_prefix_stable(self):
        """Test that a smaller sample is a prefix of a larger one."""
        scm = chain_scm()
        small = sample(scm, 10, seed=4).values
        large = sample(scm, 100, seed=4).values
        np.testing.assert_array_equal(small, large[:10])

    def test_seeds(self):
        """Test reproducibility and seed sensitivity."""
        scm = chain_scm()
        np.testing.assert_array_equal(
            sample(scm, 20, seed=2).values, sample(scm, 20, seed=2).values
        )
        assert not np.array_equal(
            sample(scm, 20, seed=2).values, sample(scm, 20, seed=3).values
        )

    def test_linear_mean(self):
        """Test that B tracks twice A."""
        data = sample(chain_scm(), 2000, seed=0)
        residual = data.column("B") - 2.0 * data.column("A")
        assert abs(residual.mean()) < 0.02
        assert residual.std() == pytest.approx(0.1, rel=0.1)

    def test_categorical_root_uniform(self):
        """Test that a categorical root without a mechanism is uniform."""
        g = CausalGraph.from_names([VariableSpec("Z", "categorical", 4)], [])
        codes = sample(Scm(g, {}), 4000, seed=0).column("Z")
        assert set(codes.tolist()) == {0, 1, 2, 3}
        assert np.bincount(codes).min() > 850

    def test_categorical_logits(self):
        """Test that a dominant logit picks its level almost always."""
        g = CausalGraph.from_names([VariableSpec("Z", "categorical", 2)], [])
        mech = Mechanism(kind="categorical", logits=((6.0,), (-6.0,)))
        codes = sample(Scm(g, {"Z": mech}), 1000, seed=0).column("Z")
        assert (codes == 0).mean() > 0.99

    def test_categorical_child(self):
        """Test that a categorical child follows its numeric parent."""
        g = CausalGraph.from_names(
            [VariableSpec("X"), VariableSpec("Z", "categorical", 2)], [("X", "Z")]
        )
        mech = Mechanism(kind="categorical", logits=((0.0, 20.0), (0.0, -20.0)))
        scm = Scm(g, {"X": linear(Noise("gaussian", 1.0)), "Z": mech})
        data = sample(scm, 500, seed=0)
        agree = (data.column("Z") == 0) == (data.column("X") > 0)
        assert agree.mean() > 0.95

    def test_n_positive(self):
        """Test that at least one row is requested."""
        with pytest.raises(ValidationError):
            sample(chain_scm(), 0)


class TestIntervene:
    """Tests for do() surgery."""

    def test_cuts_incoming_edges(self):
        """Test that the assigned node loses its parents."""
        after = intervene(chain_scm(), {"B": 1.0})
        assert after.graph.parents("B") == ()
        assert after.graph.has_edge("B", "C")

    def test_upstream_unchanged(self):
        """Test that A's marginal is unaffected by do(B)."""
        scm = chain_scm()
        before = sample(scm, 200, seed=5).column("A")
        after = sample(intervene(scm, {"B": 1.0}), 200, seed=5).column("A")
        np.testing.assert_array_equal(before, after)

    def test_downstream_follows_assignment(self):
        """Test that C depends only on the assigned B."""
        scm = chain_scm()
        low = sample(intervene(scm, {"B": 1.0}), 200, seed=5).column("C")
        high = sample(intervene(scm, {"B": 2.0}), 200, seed=5).column("C")
        np.testing.assert_allclose(high - low, 1.0)

    def test_collider_parents_stay_independent(self):
        """Test that do() on a collider leaves its causes independent."""
        scm = Scm(
            graph(["A", "B", "C"], [("A", "B"), ("C", "B")]),
            {"B": linear(A=1.0, C=1.0)},
        )
        data = discretize(sample(intervene(scm, {"B": 0.5}), 10000, seed=0), 4)
        assert not chi2_independence(data, "A", "C", alpha=0.001).dependent

    def test_idempotent(self):
        """Test that repeating an assignment changes nothing."""
        once = intervene(chain_scm(), {"B": 1.5})
        twice = intervene(once, {"B": 1.5})
        assert twice.graph.edge_names == once.graph.edge_names
        np.testing.assert_array_equal(
            sample(twice, 100, seed=2).values, sample(once, 100, seed=2).values
        )

    def test_disjoint_assignments_commute(self):
        """Test that do(A) then do(C) equals do(C) then do(A) equals both at once."""
        scm = chain_scm()
        first = intervene(intervene(scm, {"A": 1.0}), {"C": -2.0})
        second = intervene(intervene(scm, {"C": -2.0}), {"A": 1.0})
        joint = intervene(scm, {"A": 1.0, "C": -2.0})
        expected = sample(joint, 100, seed=4).values
        for other in (first, second):
            assert other.graph.edge_names == joint.graph.edge_names
            np.testing.assert_array_equal(sample(other, 100, seed=4).values, expected)

    def test_unknown_node(self):
        """Test that assignments must name graph nodes."""
        with pytest.raises(ValidationError):
            intervene(chain_scm(), {"Q": 1.0})


class TestCounterfactual:
    """Tests for abduction and counterfactual prediction."""

    def test_hand_computed_chain(self):
        """Test the closed form on the linear chain."""
        result = counterfactual(chain_scm(), {"A": 1.0, "B": 3.0, "C": 4.0}, {"A": 2.0})
        assert result["A"] == 2.0
        assert result["B"] == pytest.approx(5.0)
        assert result["C"] == pytest.approx(6.0)

    def test_abducted_noise(self):
        """Test the recovered noise terms."""
        noise = abduct(chain_scm(), {"A": 1.0, "B": 3.0, "C": 4.0})
        assert noise == pytest.approx({"A": 1.0, "B": 1.0, "C": 1.0})

    def test_no_change_returns_observation(self):
        """Test that assigning observed values reproduces the observation."""
        obs = {"A": 1.0, "B": 3.0, "C": 4.0}
        assert counterfactual(chain_scm(), obs, {}) == obs
        assert counterfactual(chain_scm(), obs, {"B": 3.0}) == obs

    def test_non_descendants_kept(self):
        """Test that do(B) leaves A exactly as observed."""
        result = counterfactual(chain_scm(), {"A": 1.0, "B": 3.0, "C": 4.0}, {"B": 0.0})
        assert result["A"] == 1.0
        assert result["C"] == pytest.approx(1.0)

    @settings(max_examples=100, deadline=None)
    @given(finite, finite, finite, finite, finite, finite, finite)
    def test_random_linear_models(self, w_ab, w_ac, w_bc, a, b, c, new_b):
        """Test counterfactual arithmetic on random linear diamonds."""
        scm = Scm(
            graph(["A", "B", "C"], [("A", "B"), ("A", "C"), ("B", "C")]),
            {"B": linear(A=w_ab), "C": linear(A=w_ac, B=w_bc)},
        )
        obs = {"A": a, "B": b, "C": c}
        assert counterfactual(scm, obs, {"A": a}) == obs
        result = counterfactual(scm, obs, {"B": new_b})
        assert result["A"] == a
        expected_c = c + w_bc * (new_b - b)
        assert result["C"] == pytest.approx(expected_c, abs=1e-9)

    def test_noise_free_inconsistency(self):
        """Test that a noise-free node off its mechanism is refused."""
        scm = Scm(
            graph(["A", "B"], [("A", "B")]),
            {"B": linear(Noise("none"), A=2.0)},
        )
        with pytest.raises(InconsistentObservationError):
            abduct(scm, {"A": 1.0, "B": 2.5})
        assert abduct(scm, {"A": 1.0, "B": 2.0})["B"] == pytest.approx(0.0)

    def test_uniform_support(self):
        """Test that a residual outside uniform noise support is refused."""
        scm = Scm(
            graph(["A", "B"], [("A", "B")]),
            {"B": linear(Noise("uniform", low=-0.5, high=0.5), A=1.0)},
        )
        with pytest.raises(InconsistentObservationError, match="support"):
            abduct(scm, {"A": 0.0, "B": 0.9})

    def test_categorical_refused(self):
        """Test that models with categorical nodes have no counterfactuals."""
        g = CausalGraph.from_names([VariableSpec("Z", "categorical", 2)], [])
        with pytest.raises(ValidationError, match="categorical"):
            abduct(Scm(g, {}), {"Z": 0})

    def test_missing_variable(self):
        """Test that the observation must cover every node."""
        with pytest.raises(ValidationError, match="lacks C"):
            counterfactual(chain_scm(), {"A": 1.0, "B": 3.0}, {"A": 2.0})

    def test_unknown_assignment(self):
        """Test that assignments are checked before abduction."""
        with pytest.raises(ValidationError, match="unknown variable"):
            counterfactual(chain_scm(), {"A": 1.0}, {"Q": 2.0})


class TestScmFiles:
    """Tests for model files and assignment parsing."""

    def test_write_then_load(self, tmp_path):
        """Test that a written model samples identically."""
        scm = chain_scm()
        write_scm(scm, tmp_path / "scm.json")
        again = load_scm(tmp_path / "scm.json")
        np.testing.assert_array_equal(
            sample(scm, 30, seed=9).values, sample(again, 30, seed=9).values
        )

    def test_parse_assignments(self):
        """Test NAME=VALUE parsing."""
        assert parse_assignments(["A=2", "B = -0.5"]) == {"A": 2.0, "B": -0.5}

    @pytest.mark.parametrize("item", ["A", "=2", "A=two"])
    def test_bad_assignment(self, item):
        """Test malformed assignments."""
        with pytest.raises(ValidationError):
            parse_assignments([item])


class TestPendulum:
    """Tests for the pendulum scene oracle."""

    def test_overhead_light(self):
        """Test that a vertical rod under an overhead light casts a point shadow."""
        scene = render_pendulum(0.0, 90.0)
        assert scene.shadow_position == pytest.approx(0.5)
        assert scene.shadow_length == pytest.approx(ROD_WIDTH)

    def test_mirrored_lights(self):
        """Test that lights at 60 and 120 degrees cast mirrored shadows."""
        left = render_pendulum(0.0, 60.0)
        right = render_pendulum(0.0, 120.0)
        assert left.shadow_position + right.shadow_position == pytest.approx(1.0)
        assert left.shadow_length == pytest.approx(right.shadow_length)

    def test_swing_moves_shadow(self):
        """Test that swinging the rod shifts the shadow."""
        assert render_pendulum(30.0, 90.0).shadow_position > 0.5
        assert render_pendulum(-30.0, 90.0).shadow_position < 0.5

    def test_overhead_light_monotone_in_swing(self):
        """Test that the shadow moves right and stretches as the rod swings right."""
        scenes = [render_pendulum(a, 90.0) for a in np.linspace(-45.0, 45.0, 19)]
        positions = [s.shadow_position for s in scenes]
        assert all(a < b for a, b in zip(positions, positions[1:]))
        lengths = [s.shadow_length for s in scenes[9:]]
        assert all(a <= b for a, b in zip(lengths, lengths[1:]))

    def test_shadow_moves_against_light(self):
        """Test that raising the light angle pushes the shadow to the right."""
        positions = [
            render_pendulum(10.0, light).shadow_position
            for light in np.linspace(60.0, 120.0, 13)
        ]
        assert all(a < b for a, b in zip(positions, positions[1:]))

    def test_raster(self):
        """Test the raster size and the shadow band on the floor rows."""
        raster = render_pendulum(20.0, 70.0).raster
        assert (raster.width, raster.height) == (RASTER_SIZE, RASTER_SIZE)
        assert raster.bits[-SHADOW_ROWS:].any()
        assert raster.bits[: RASTER_SIZE // 2].any()

    @pytest.mark.parametrize("angles", [(50.0, 90.0), (0.0, 130.0)])
    def test_out_of_range(self, angles):
        """Test that angles outside the scene ranges are refused."""
        with pytest.raises(ValidationError, match="outside"):
            render_pendulum(*angles)

    def test_sample_table(self):
        """Test that sampled scenes tabulate under the pendulum graph names."""
        table = pendulum_table(sample_pendulum(20, seed=3))
        assert set(table.names) == set(pendulum_graph().names)
        assert table.n_rows == 20

    def test_graph_matches_fixture(self):
        """Test that the built-in graph equals the bundled file."""
        assert pendulum_graph().same_structure(
            load_graph(fixture_path("pendulum.json"))
        )

    def test_null_intervention_pairs(self):
        """Test that without an intervention every oracle equals its scene."""
        cases = pendulum_counterfactual_pairs(5, seed=1)
        result = counterfactual_accuracy(cases)
        assert result.mean_iou == 1.0
        assert result.mean_l1 == 0.0

    def test_light_intervention(self):
        """Test that moving the light changes some oracle rasters."""
        cases = pendulum_counterfactual_pairs(
            5, seed=1, intervention=("light_angle", 60.0)
        )
        assert all(c.intervention == ("light_angle", 60.0) for c in cases)
        assert counterfactual_accuracy(cases).mean_l1 > 0.0

    def test_unknown_intervention(self):
        """Test that only the two causes can be intervened on."""
        with pytest.raises(ValidationError):
            pendulum_counterfactual_pairs(1, intervention=("shadow_length", 0.1))
