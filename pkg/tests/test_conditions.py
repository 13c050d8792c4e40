import numpy as np
import pytest

from aubincheck.calculus import (
    BOUNDARY,
    DEGENERATE,
    CaseTag,
    EvalPoint,
    ToleranceConfig,
    classify_point,
    derivative_bundle,
    lagrange_multiplier,
)
from aubincheck.conditions import (
    MODE_EXTENDED,
    MODE_STRICT,
    ConditionMatrices,
    assemble_matrices,
    check_degenerate,
    check_interior,
    check_nondegenerate,
    coderivative_membership,
    extended_map_verdict,
    gamma_systems,
    verdict,
)
from aubincheck.errors import NotStationary
from aubincheck.expr import ProblemSpec, parse
from aubincheck.fixtures import PRODUCT_CONSTRAINT_ALT

TOL = ToleranceConfig()


def _case(problems, name):
    pf = problems[name]
    b = derivative_bundle(pf.spec, pf.point)
    tag = classify_point(b, TOL)
    lam = lagrange_multiplier(b, TOL).lam if tag.is_boundary else 0.0
    return pf, b, tag, lam


def _holds(reports):
    return {r.id: r.holds for r in reports}


class TestAssembleMatrices:
    def test_circle(self, problems):
        _, b, tag, lam = _case(problems, "circle_boundary")
        m = assemble_matrices(b, tag, lam)
        assert np.max(np.abs(m.A1 - np.array([[0.0, 2.0]]))) <= 1e-10
        assert np.max(np.abs(m.A2 - np.array([[1.0, 2.0]]))) <= 1e-10

    def test_moving_plane(self, problems):
        _, b, tag, lam = _case(problems, "moving_plane")
        m = assemble_matrices(b, tag, lam)
        assert np.allclose(m.A1, [[0.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        assert np.allclose(m.A2, [[0.0, 0.0, -1.0]])

    def test_halfline_quadratic_degenerate(self, problems):
        _, b, tag, lam = _case(problems, "halfline_quadratic")
        m = assemble_matrices(b, tag, lam)
        assert m.degenerate
        assert np.allclose(m.A1, [[2.0, 1.0]])
        assert np.allclose(m.A2, [[0.0, 1.0]])

    def test_product_constraint_recomputed(self, problems):
        _, b, tag, lam = _case(problems, "product_constraint")
        assert lam == pytest.approx(2.0)
        m = assemble_matrices(b, tag, lam)
        assert np.allclose(m.A1, [[-2.0, 1.0]])
        assert np.allclose(m.A2, [[4.0, 0.0]])


class TestInteriorConditions:
    def test_bilinear_ball(self, problems):
        _, b, _, _ = _case(problems, "bilinear_ball")
        h = _holds(check_interior(b, TOL))
        assert h == {"C3_2": True, "C3_4": False, "C3_5": False}

    def test_cubic_pitchfork(self, problems):
        _, b, _, _ = _case(problems, "cubic_pitchfork")
        h = _holds(check_interior(b, TOL))
        assert h == {"C3_2": False, "C3_4": True, "C3_5": False}

    def test_trust_region(self, problems):
        _, b, _, _ = _case(problems, "trust_region")
        h = _holds(check_interior(b, TOL))
        assert h == {"C3_2": True, "C3_4": True, "C3_5": True}


class TestNondegenerateConditions:
    def test_circle(self, problems):
        _, b, tag, lam = _case(problems, "circle_boundary")
        h = _holds(check_nondegenerate(assemble_matrices(b, tag, lam), b.gxF, TOL))
        assert h == {"C4_4": True, "C4_6": True, "C4_8": True}

    def test_moving_plane(self, problems):
        _, b, tag, lam = _case(problems, "moving_plane")
        h = _holds(check_nondegenerate(assemble_matrices(b, tag, lam), b.gxF, TOL))
        assert h == {"C4_4": False, "C4_6": True, "C4_8": False}

    def test_product_constraint(self, problems):
        _, b, tag, lam = _case(problems, "product_constraint")
        h = _holds(check_nondegenerate(assemble_matrices(b, tag, lam), b.gxF, TOL))
        assert h["C4_8"] and h["C4_4"] and h["C4_6"]


class TestDegenerateConditions:
    def test_halfline_quadratic_all_hold(self, problems):
        _, b, tag, lam = _case(problems, "halfline_quadratic")
        h = _holds(check_degenerate(assemble_matrices(b, tag, lam), b.Hxx, b.Hwx, b.gxF, TOL))
        assert all(h[c] for c in ("C4_10", "C4_11a", "C4_11b", "C4_12", "C4_13", "C4_14"))

    def test_halfline_bilinear_necessity_fails(self, problems):
        _, b, tag, lam = _case(problems, "halfline_bilinear")
        h = _holds(check_degenerate(assemble_matrices(b, tag, lam), b.Hxx, b.Hwx, b.gxF, TOL))
        assert not h["C4_14"]
        assert not h["C4_13"]

    def test_alt_matrix_fixture_c4_11b_fails(self):
        # The alternative degenerate reading of the product-constraint data.
        alt = PRODUCT_CONSTRAINT_ALT
        mats = ConditionMatrices(
            True, 0.0, np.array(alt["A1_deg"]), np.array(alt["A2_deg"])
        )
        Hxx = np.array([[alt["A1_deg"][0][0]]])
        Hwx = np.array([[alt["A2_deg"][0][0]]])
        gxF = np.array(alt["gxF"])
        h = _holds(check_degenerate(mats, Hxx, Hwx, gxF, TOL))
        assert h["C4_10"] and h["C4_11a"]
        assert not h["C4_11b"]
        assert not h["C4_13"]


class TestVerdict:
    EXPECTED = {
        "trust_region": ("Yes", "Thm3.1(b,c)"),
        "bilinear_ball": ("No", "Thm3.1(c)"),
        "cubic_pitchfork": ("Unknown", None),
        "quartic_cuberoot": ("Unknown", None),
        "circle_boundary": ("Yes", "Thm4.1"),
        "moving_plane": ("Unknown", None),
        "product_constraint": ("Yes", "Thm4.1"),
        "halfline_quadratic": ("Yes", "Thm4.3(b)"),
        "halfline_bilinear": ("No", "Thm4.3(a)"),
    }

    @pytest.mark.parametrize("name", sorted(EXPECTED))
    def test_fixture_verdicts(self, problems, name):
        pf = problems[name]
        v = verdict(pf.spec, pf.point, pf.tolerances, MODE_EXTENDED)
        answer, theorem = self.EXPECTED[name]
        assert v.lipschitz_like == answer
        assert v.theorem_applied == theorem

    def test_moving_plane_strict_unknown(self, problems):
        pf = problems["moving_plane"]
        v = verdict(pf.spec, pf.point, pf.tolerances, MODE_STRICT)
        assert v.lipschitz_like == "Unknown"
        assert v.condition("C4_6").holds and not v.condition("C4_4").holds

    def test_extended_mode_refutes_on_c4_6(self):
        # Boundary nondegenerate with C4_4 holding but C4_6 failing: strict
        # stays Unknown, extended refutes via the unconditional inner estimate.
        spec = ProblemSpec(2, 1, parse("w1*x1 - x2", 2, 1), parse("x2 + w1", 2, 1))
        point = EvalPoint([0.0, 0.0], [0.0])
        strict = verdict(spec, point, TOL, MODE_STRICT)
        extended = verdict(spec, point, TOL, MODE_EXTENDED)
        assert strict.condition("C4_4").holds and not strict.condition("C4_6").holds
        assert strict.lipschitz_like == "Unknown"
        assert extended.lipschitz_like == "No"
        assert extended.theorem_applied == "LowerEstimateNecessity"

    def test_mode_monotonicity(self, problems):
        # strict Unknown may only sharpen to extended No, never to Yes.
        for pf in problems.values():
            s = verdict(pf.spec, pf.point, pf.tolerances, MODE_STRICT)
            e = verdict(pf.spec, pf.point, pf.tolerances, MODE_EXTENDED)
            if s.lipschitz_like != e.lipschitz_like:
                assert (s.lipschitz_like, e.lipschitz_like) == ("Unknown", "No")

    def test_borderline_lambda_dual_analysis(self):
        spec = ProblemSpec(1, 1, parse("-0.000000005*x1", 1, 1), parse("x1 + w1", 1, 1))
        point = EvalPoint([0.0], [0.0])
        v = verdict(spec, point, TOL, MODE_EXTENDED)
        ids = {r.id for r in v.conditions}
        assert {"C4_10", "C4_8"} <= ids  # both branches evaluated
        assert v.case.borderline_lambda
        # degenerate branch is Unknown here, nondegenerate says Yes: meet is Unknown
        assert v.lipschitz_like == "Unknown"
        assert any("zero tolerance" in w for w in v.warnings)

    def test_not_stationary_raises(self):
        spec = ProblemSpec(1, 1, parse("x1", 1, 1), parse("x1 - 1", 1, 1))
        with pytest.raises(NotStationary):
            verdict(spec, EvalPoint([0.0], [0.0]), TOL)


class TestExtendedMap:
    def test_trust_region_true(self, problems):
        _, b, _, _ = _case(problems, "trust_region")
        assert extended_map_verdict(b, TOL)

    def test_cubic_false(self, problems):
        _, b, _, _ = _case(problems, "cubic_pitchfork")
        assert not extended_map_verdict(b, TOL)

    def test_simple_true(self):
        spec = ProblemSpec(1, 1, parse("x1^2", 1, 1), parse("x1 - 1", 1, 1))
        b = derivative_bundle(spec, EvalPoint([0.0], [0.0]))
        assert extended_map_verdict(b, TOL)


class TestImplicationInvariants:
    def test_interior_equivalence_random(self):
        """C3_5 <=> C3_2 and C3_4 on random integer problems."""
        rng = np.random.default_rng(8)
        for _ in range(100):
            n = int(rng.integers(1, 4))
            d = int(rng.integers(1, 4))
            M = rng.integers(-3, 4, size=(n, n)).astype(float)
            Hxx = (M + M.T) / 2.0
            Hwx = rng.integers(-3, 4, size=(d, n)).astype(float)
            from aubincheck.kernel import contained_in_kernel, null_space, stacked_kernel

            c3_2 = stacked_kernel([Hxx, Hwx], TOL).is_trivial
            c3_4 = contained_in_kernel(null_space(Hxx, TOL), Hwx, TOL)
            c3_5 = null_space(Hxx, TOL).is_trivial
            assert c3_5 == (c3_2 and c3_4)

    def test_boundary_implications_random(self):
        """C4_8 => C4_4 and C4_6; C4_13 => C4_14 on random boundary data."""
        rng = np.random.default_rng(21)
        for trial in range(100):
            n = int(rng.integers(1, 4))
            d = int(rng.integers(1, 4))
            M = rng.integers(-3, 4, size=(n, n)).astype(float)
            Hxx = (M + M.T) / 2.0
            Hwx = rng.integers(-3, 4, size=(d, n)).astype(float)
            Fsym = rng.integers(-2, 3, size=(n, n)).astype(float)
            Fxx = (Fsym + Fsym.T) / 2.0
            Fwx = rng.integers(-2, 3, size=(d, n)).astype(float)
            gxF = rng.integers(-3, 4, size=n).astype(float)
            while not np.any(gxF):
                gxF = rng.integers(-3, 4, size=n).astype(float)
            gwF = rng.integers(-3, 4, size=d).astype(float)
            if trial % 2 == 0:
                lam = float(rng.integers(1, 4))
                A1 = np.hstack([Hxx + lam * Fxx, gxF[:, None]])
                A2 = np.hstack([Hwx + lam * Fwx, gwF[:, None]])
                m = ConditionMatrices(False, lam, A1, A2)
                h = _holds(check_nondegenerate(m, gxF, TOL))
                if h["C4_8"]:
                    assert h["C4_4"] and h["C4_6"]
            else:
                A1 = np.hstack([Hxx, gxF[:, None]])
                A2 = np.hstack([Hwx, gwF[:, None]])
                m = ConditionMatrices(True, 0.0, A1, A2)
                h = _holds(check_degenerate(m, Hxx, Hwx, gxF, TOL))
                assert h["C4_13"] == (
                    h["C4_10"] and h["C4_11a"] and h["C4_11b"] and h["C4_12"]
                )
                if h["C4_13"]:
                    assert h["C4_14"]

    def test_fixture_implications(self, problems):
        for pf in problems.values():
            v = verdict(pf.spec, pf.point, pf.tolerances, MODE_EXTENDED)
            h = {r.id: r.holds for r in v.conditions}
            if "C3_5" in h:
                assert h["C3_5"] == (h["C3_2"] and h["C3_4"])
            if "C4_8" in h and h["C4_8"]:
                assert h["C4_4"] and h["C4_6"]
            if "C4_13" in h and h["C4_13"]:
                assert h["C4_14"]


class TestMembership:
    def test_circle_origin(self, problems):
        _, b, tag, lam = _case(problems, "circle_boundary")
        r = coderivative_membership(b, tag, lam, [0.0], [0.0], TOL)
        assert r.answer == "In"

    def test_circle_in_with_witness(self, problems):
        _, b, tag, lam = _case(problems, "circle_boundary")
        r = coderivative_membership(b, tag, lam, [-2.0], [2.0], TOL)
        assert r.answer == "In"
        assert r.witness_v == pytest.approx([0.0], abs=1e-10)
        assert r.witness_gamma == pytest.approx(1.0, abs=1e-10)

    def test_circle_out(self, problems):
        _, b, tag, lam = _case(problems, "circle_boundary")
        r = coderivative_membership(b, tag, lam, [0.0], [1.0], TOL)
        assert r.answer == "Out"

    def test_origin_in_everywhere(self, problems):
        for pf in problems.values():
            b = derivative_bundle(pf.spec, pf.point)
            tag = classify_point(b, TOL)
            lam = lagrange_multiplier(b, TOL).lam if tag.is_boundary else 0.0
            zero_x = [0.0] * pf.spec.n
            zero_w = [0.0] * pf.spec.d
            r = coderivative_membership(b, tag, lam, zero_x, zero_w, TOL)
            assert r.answer == "In", pf.path

    def test_witnesses_satisfy_branch_systems(self, problems):
        rng = np.random.default_rng(77)
        desc_cache = {}
        for pf in problems.values():
            b = derivative_bundle(pf.spec, pf.point)
            tag = classify_point(b, TOL)
            lam = lagrange_multiplier(b, TOL).lam if tag.is_boundary else 0.0
            desc = gamma_systems(b, tag, lam)
            for _ in range(10):
                xp = rng.integers(-2, 3, size=pf.spec.n).astype(float)
                wp = rng.integers(-2, 3, size=pf.spec.d).astype(float)
                r = coderivative_membership(b, tag, lam, xp, wp, TOL)
                if r.answer != "In":
                    continue
                branch = next(br for br in desc.branches if br.name == r.branch)
                z = np.array(
                    list(r.witness_v) + ([r.witness_gamma] if branch.has_gamma else [])
                )
                resid = np.linalg.norm(branch.M @ z - branch.rhs(xp, wp))
                assert resid <= 1e-7 * (1.0 + np.linalg.norm(branch.rhs(xp, wp)))

    def test_degenerate_unknown_without_regularity(self):
        # C4_10 fails here, so a non-inner point cannot be certified Out.
        spec = ProblemSpec(1, 1, parse("-0.000000005*x1", 1, 1), parse("x1 + w1", 1, 1))
        b = derivative_bundle(spec, EvalPoint([0.0], [0.0]))
        tag = CaseTag(BOUNDARY, DEGENERATE)
        r = coderivative_membership(b, tag, 0.0, [0.0], [5.0], TOL)
        assert r.answer == "Unknown"
        assert any("C4_10" in note for note in r.notes)

    def test_interior_out_requires_c3_2(self, problems):
        # cubic_pitchfork: C3_2 fails, infeasible queries downgrade to Unknown.
        _, b, tag, _ = _case(problems, "cubic_pitchfork")
        r = coderivative_membership(b, tag, 0.0, [1.0], [1.0], TOL)
        assert r.answer == "Unknown"
        assert any("C3_2" in note for note in r.notes)

    def test_degenerate_outer_estimate_out(self, problems):
        # halfline_quadratic has C4_10; at x'=0, w'=1 the inner system forces
        # v = -1/2 < 0 and every outer branch is inconsistent, hence Out.
        _, b, tag, lam = _case(problems, "halfline_quadratic")
        r = coderivative_membership(b, tag, lam, [0.0], [1.0], TOL)
        assert r.answer == "Out"

    def test_degenerate_inner_estimate_in(self, problems):
        # halfline_quadratic at x'=-2, w'=1: v=1/2 >= 0, gamma=1 >= 0 solves
        # the inner system (2v + gamma = 2, gamma = 1).
        _, b, tag, lam = _case(problems, "halfline_quadratic")
        r = coderivative_membership(b, tag, lam, [-2.0], [1.0], TOL)
        assert r.answer == "In"
        assert r.witness_v == pytest.approx([0.5], abs=1e-9)
        assert r.witness_gamma == pytest.approx(1.0, abs=1e-9)


class TestTwoDimensionalDegenerate:
    """Degenerate boundary case with a free direction: exercises the
    negative-collinear slice path of the closed-wedge cone decision in 2-D."""

    def _setup(self):
        spec = ProblemSpec(2, 1, parse("x1^2", 2, 1), parse("x1 + w1", 2, 1))
        point = EvalPoint([0.0, 0.0], [0.0])
        return spec, point

    def test_conditions(self):
        spec, point = self._setup()
        b = derivative_bundle(spec, point)
        tag = classify_point(b, TOL)
        assert (tag.kind, tag.subtag) == (BOUNDARY, DEGENERATE)
        m = assemble_matrices(b, tag, 0.0)
        assert np.allclose(m.A1, [[2.0, 0.0, 1.0], [0.0, 0.0, 0.0]])
        assert np.allclose(m.A2, [[0.0, 0.0, 1.0]])
        h = _holds(check_degenerate(m, b.Hxx, b.Hwx, b.gxF, TOL))
        # the free x2 direction sits in ker A1' and ker A2': C4_10 fails,
        # but the cone-restricted necessary condition holds via the slice.
        assert h == {
            "C4_10": False,
            "C4_11a": True,
            "C4_11b": True,
            "C4_12": True,
            "C4_13": False,
            "C4_14": True,
        }

    def test_verdict_unknown(self):
        spec, point = self._setup()
        v = verdict(spec, point, TOL)
        assert v.lipschitz_like == "Unknown"
