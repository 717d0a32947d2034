import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from app.core.exceptions import DegenerateStructureError
from app.models.graded import MultiVectorField, PolyMap
from app.models.scalar import Chart, ScalarField
from app.models.structures import ContactData, JacobiPair, LCSPair
from app.services.geomstruct_service import (
    certify_contact,
    classify_2form,
    hamiltonian_field,
    hamiltonian_relations_check,
    jacobi_bracket,
    jacobi_check,
    jacobi_from_contact,
    jacobi_from_lcs,
    structure_from_nondeg_jacobi,
)
from app.services.extcalc_service import pullback, pushforward
from app.services.grammar_service import parse_form, parse_multivector
from app.services.symexpr_service import parse_scalar
from tests.strategies import polynomials, rational_functions, small_ints

R3 = Chart(("x", "y", "z"))
STD_PAIR = JacobiPair(parse_multivector("@x ^ @y - x*@x ^ @z", R3), parse_multivector("@z", R3))


def test_jacobi_pair_of_standard_contact_form(std_contact):
    pair = jacobi_from_contact(std_contact)
    assert pair == STD_PAIR
    assert jacobi_check(pair).ok


def test_poisson_pair(r4):
    pair = JacobiPair(parse_multivector("@x ^ @y + @u ^ @v", r4), MultiVectorField.zero(r4, 1))
    assert jacobi_check(pair).ok


def test_non_jacobi_pair(r3):
    pair = JacobiPair(parse_multivector("@x ^ @y - x*@x ^ @z", r3), MultiVectorField.zero(r3, 1))
    check = jacobi_check(pair)
    assert not check.bracket_ok
    assert check.invariance_ok


def test_jacobi_bracket_values(r3):
    x, y, z, one = (parse_scalar(t, r3) for t in ("x", "y", "z", "1"))
    assert jacobi_bracket(STD_PAIR, x, y) == 1
    assert jacobi_bracket(STD_PAIR, one, z) == 1
    assert jacobi_bracket(STD_PAIR, y, z) == y


def test_jacobi_identity_on_coordinates(r3):
    x, y, z = (parse_scalar(t, r3) for t in "xyz")
    b = lambda f, g: jacobi_bracket(STD_PAIR, f, g)  # noqa: E731
    assert (b(x, b(y, z)) + b(y, b(z, x)) + b(z, b(x, y))).is_zero()


def test_hamiltonian_field(r3):
    assert hamiltonian_field(STD_PAIR, parse_scalar("x", r3)) == parse_multivector("@y - x*@z", r3)
    assert hamiltonian_field(STD_PAIR, parse_scalar("z", r3)) == parse_multivector("x*@x", r3)


@given(polynomials(R3, max_degree=1, max_terms=2), polynomials(R3, max_degree=1, max_terms=2))
def test_hamiltonian_relations(f, g):
    assert hamiltonian_relations_check(STD_PAIR, f, g).is_zero


def test_lcs_to_jacobi_and_back(r4):
    omega = parse_form("1/(1 + x^2)*d x ^ d y + 1/(1 + x^2)*d u ^ d v", r4)
    theta = classify_2form(omega).lee_form
    pair = jacobi_from_lcs(LCSPair(omega, theta))
    assert jacobi_check(pair).ok
    recovered = structure_from_nondeg_jacobi(pair)
    assert isinstance(recovered, LCSPair)
    assert recovered.omega == omega
    assert recovered.theta == theta


def test_conformal_lcs_jacobi_pair(r4):
    omega = parse_form("1/u*d x ^ d y + 1/u*d u ^ d v", r4)
    pair = jacobi_from_lcs(LCSPair(omega, parse_form("1/u*d u", r4)))
    assert pair.E == parse_multivector("@v", r4)
    assert jacobi_check(pair).ok


def test_contact_dichotomy():
    recovered = structure_from_nondeg_jacobi(STD_PAIR)
    assert isinstance(recovered, ContactData)
    assert recovered.alpha == parse_form("d z + x*d y", R3)
    assert recovered.reeb == STD_PAIR.E


def test_dichotomy_round_trip_of_contact_data(r3):
    C = certify_contact(parse_form("d z + x*d y - y*d x", r3))
    recovered = structure_from_nondeg_jacobi(jacobi_from_contact(C))
    assert recovered.alpha == C.alpha


def test_degenerate_characteristic_distribution(r3):
    pair = JacobiPair(parse_multivector("@x ^ @y", r3), MultiVectorField.zero(r3, 1))
    with pytest.raises(DegenerateStructureError):
        structure_from_nondeg_jacobi(pair)


CERTIFIED_PAIR = jacobi_from_contact(certify_contact(parse_form("d z + x*d y - y*d x", R3)))


@pytest.mark.parametrize("pair", [STD_PAIR, CERTIFIED_PAIR], ids=["standard", "certified"])
@settings(max_examples=60)
@given(rational_functions(R3), rational_functions(R3), rational_functions(R3))
def test_jacobi_identity_on_rational_functions(pair, f, g, h):
    b = lambda u, v: jacobi_bracket(pair, u, v)  # noqa: E731
    assert (b(f, b(g, h)) + b(g, b(h, f)) + b(h, b(f, g))).is_zero()


@st.composite
def triangular_diffeomorphisms(draw):
    """(x, y + p(x), z + q(x, y)) with its polynomial inverse."""
    x, y, z = (ScalarField.coordinate(R3, i) for i in range(3))
    a1, a2, b1, b2, b3 = (draw(small_ints) for _ in range(5))
    p = a1 * x + a2 * x ** 2
    q = lambda u, v: b1 * u * v + b2 * v ** 2 + b3 * u ** 2  # noqa: E731
    phi = PolyMap(R3, R3, [x, y + p, z + q(x, y)])
    phi_inverse = PolyMap(R3, R3, [x, y - p, z - q(x, y - p)])
    return phi, phi_inverse


@pytest.mark.parametrize("text", ["d z + x*d y", "d z + x*d y - y*d x"])
@settings(max_examples=20)
@given(triangular_diffeomorphisms())
def test_contactomorphic_pullback_round_trip(text, maps):
    phi, phi_inverse = maps
    base = certify_contact(parse_form(text, R3))
    pulled = certify_contact(pullback(phi, base.alpha))
    pair = jacobi_from_contact(pulled)
    base_pair = jacobi_from_contact(base)
    assert pair.Lambda == pushforward(phi_inverse, phi, base_pair.Lambda)
    assert pair.E == pushforward(phi_inverse, phi, base_pair.E)
    assert pulled.reeb == pair.E
    recovered = structure_from_nondeg_jacobi(pair)
    assert isinstance(recovered, ContactData)
    assert recovered.alpha == pulled.alpha
