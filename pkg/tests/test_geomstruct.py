import pytest
from hypothesis import given

from app.core.exceptions import DegenerateStructureError, GeometryError, ParityError
from app.models.models import NondegStatus, StructureKind
from app.models.scalar import Chart, Point
from app.services.extcalc_service import apply_vector, differential, exterior_d, form_on_vectors, interior_product
from app.services.geomstruct_service import (
    certify_contact,
    classify_2form,
    contact_gradient_frame,
    contact_hamiltonian,
    contact_vector_factor,
    is_contact,
    musical_phi,
    nondegeneracy_report,
    phi_inverse,
    poisson_from_symplectic,
    reeb_field,
    sigma_map,
    split_vector,
    tau_map,
)
from app.services.grammar_service import parse_form, parse_multivector
from app.services.symexpr_service import parse_scalar
from tests.strategies import forms, multivectors, polynomials

R3 = Chart(("x", "y", "z"))
STD = certify_contact(parse_form("d z + x*d y", R3))


# ============ CONTACT ============

def test_standard_form_is_contact(r3, alpha):
    report = is_contact(alpha, [Point(r3, (0, 0, 0)), Point(r3, (1, -2, 3))])
    assert report.ok
    assert report.status is NondegStatus.NONDEGENERATE
    assert report.top_form.to_text() == "d x ^ d y ^ d z"


def test_closed_form_is_identically_degenerate(r3):
    report = is_contact(parse_form("d z", r3))
    assert report.status is NondegStatus.IDENTICALLY_DEGENERATE
    with pytest.raises(DegenerateStructureError):
        certify_contact(parse_form("d z", r3))


def test_degenerate_at_samples(r3):
    alpha = parse_form("d z + x^2*d y", r3)
    samples = [Point(r3, (0, 1, 1)), Point(r3, (1, 1, 1))]
    report = is_contact(alpha, samples)
    assert report.status is NondegStatus.DEGENERATE_AT_SAMPLES
    assert report.sample_failures == [samples[0]]
    with pytest.raises(DegenerateStructureError) as exc:
        certify_contact(alpha, samples)
    assert exc.value.samples == [samples[0]]


def test_contact_needs_odd_dimension(r4):
    with pytest.raises(ParityError):
        is_contact(parse_form("d x", r4))


def test_reeb_field_of_standard_form(std_contact, r3):
    assert std_contact.reeb == parse_multivector("@z", r3)


def test_reeb_field_defining_equations(r3):
    alpha = parse_form("(1 + z^2)*d z + x*d y - y*d x", r3)
    R = reeb_field(alpha)
    assert form_on_vectors(alpha, [R]) == 1
    assert R == parse_multivector("1/(1 + z^2)*@z", r3)
    assert interior_product(R, exterior_d(alpha)).is_zero()


def test_phi_on_standard_form(std_contact, r3):
    assert musical_phi(std_contact, parse_multivector("@x", r3)) == parse_form("d y", r3)
    assert phi_inverse(std_contact, parse_form("d x", r3)) == parse_multivector("-@y + x*@z", r3)


@given(forms(R3, 1, max_degree=1))
def test_phi_inverse_is_inverse(beta):
    assert musical_phi(STD, phi_inverse(STD, beta)) == beta


def test_contact_hamiltonian_examples(std_contact, r3):
    assert contact_hamiltonian(std_contact, parse_scalar("z", r3)) == parse_multivector("x*@x + z*@z", r3)
    assert contact_hamiltonian(std_contact, parse_scalar("x", r3)) == parse_multivector("@y", r3)
    assert contact_hamiltonian(std_contact, parse_scalar("1", r3)) == std_contact.reeb


@given(polynomials(R3))
def test_contact_hamiltonian_properties(H):
    X = contact_hamiltonian(STD, H)
    assert form_on_vectors(STD.alpha, [X]) == H
    assert contact_vector_factor(STD, X) == apply_vector(STD.reeb, H)


def test_non_contact_vector_field(std_contact, r3):
    with pytest.raises(GeometryError):
        contact_vector_factor(std_contact, parse_multivector("@x", r3))


@given(multivectors(R3, 1, max_degree=1))
def test_split_vector(X):
    horizontal, a = split_vector(STD, X)
    assert form_on_vectors(STD.alpha, [horizontal]).is_zero()
    assert horizontal + STD.reeb.scale(a) == X


@given(forms(R3, 1, max_degree=1))
def test_tau_inverts_sigma(G):
    X = sigma_map(STD, G)
    assert form_on_vectors(STD.alpha, [X]).is_zero()
    assert tau_map(STD, X) == G - STD.alpha.scale(form_on_vectors(G, [STD.reeb]))


def test_tau_rejects_vertical_vectors(std_contact):
    with pytest.raises(GeometryError):
        tau_map(std_contact, std_contact.reeb)


# ============ TWO-FORMS ============

def test_classify_symplectic(omega_r4):
    assert classify_2form(omega_r4).kind is StructureKind.SYMPLECTIC


def test_classify_lcs(r4):
    omega = parse_form("1/(1 + x^2)*d x ^ d y + 1/(1 + x^2)*d u ^ d v", r4)
    result = classify_2form(omega, [Point(r4, (1, 2, 3, 4))])
    assert result.kind is StructureKind.LCS
    assert result.lee_form == parse_form("2*x/(1 + x^2)*d x", r4)


def test_classify_not_conformally_closed(r4):
    omega = parse_form("d x ^ d y + (2 + x^2*u^2)*d u ^ d v", r4)
    result = classify_2form(omega)
    assert result.kind is StructureKind.NOT_CONFORMALLY_CLOSED
    assert result.lee_form is not None


def test_classify_degenerate(r4):
    result = classify_2form(parse_form("d x ^ d y", r4))
    assert result.kind is StructureKind.DEGENERATE
    assert result.report.identically_zero


def test_classify_needs_even_dimension(r3):
    with pytest.raises(ParityError):
        classify_2form(parse_form("d x ^ d y", r3))


def test_restricted_nondegeneracy(r3):
    omega = parse_form("d x ^ d y", r3)
    directions = [parse_multivector("@x", r3), parse_multivector("@y + @z", r3)]
    assert nondegeneracy_report(omega, directions=directions).top_power == 1
    with pytest.raises(ParityError):
        nondegeneracy_report(omega, directions=directions[:1])


def test_poisson_from_symplectic(omega_r4, r4):
    assert poisson_from_symplectic(omega_r4) == parse_multivector("@x ^ @y + @u ^ @v", r4)


def test_poisson_needs_closed_form(r4):
    with pytest.raises(GeometryError):
        poisson_from_symplectic(parse_form("d x ^ d y + x*d u ^ d v", r4))


# ============ CONTACT GRADIENT ============

def test_gradient_frame_of_coordinates(std_contact, r3):
    x, y = parse_scalar("x", r3), parse_scalar("y", r3)
    frame = contact_gradient_frame(std_contact, [x, y], [Point(r3, (1, 1, 1))])
    assert frame.frame == [parse_multivector("@y - x*@z", r3), parse_multivector("-@x", r3)]
    assert frame.pairing[0][1] == 1
    assert frame.top_coefficient == 1
    assert frame.is_symplectic


def test_gradient_frame_degenerate(std_contact, r3):
    frame = contact_gradient_frame(std_contact, [parse_scalar("y", r3), parse_scalar("z", r3)])
    assert frame.frame[1] == parse_multivector("x*@x", r3)
    assert frame.report.identically_zero
    assert not frame.is_symplectic


def test_gradient_frame_needs_even_count(std_contact, r3):
    with pytest.raises(ParityError):
        contact_gradient_frame(std_contact, [parse_scalar("x", r3)])


def test_gradient_frame_is_horizontal(std_contact, r3):
    frame = contact_gradient_frame(std_contact, [parse_scalar("x*z", r3), parse_scalar("y^2", r3)])
    for X in frame.frame:
        assert form_on_vectors(std_contact.alpha, [X]).is_zero()
    assert frame.frame[0] == sigma_map(std_contact, differential(parse_scalar("x*z", r3)))


def test_conformal_rescaling_of_symplectic_form(r4):
    omega = parse_form("(1 + x^2)*d x ^ d y + (1 + x^2)*d u ^ d v", r4)
    result = classify_2form(omega)
    assert result.kind is StructureKind.LCS
    assert result.lee_form == parse_form("-2*x/(1 + x^2)*d x", r4)
    assert exterior_d(result.lee_form).is_zero()
