from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings as hypothesis_settings

from app.models.foliation import ProductChart
from app.models.scalar import Chart
from app.services.geomstruct_service import certify_contact
from app.services.grammar_service import parse_form

hypothesis_settings.register_profile(
    "default",
    deadline=None,
    derandomize=True,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
hypothesis_settings.load_profile("default")

SCENES = Path(__file__).resolve().parent.parent / "fixtures" / "scenes"


@pytest.fixture
def scenes() -> Path:
    return SCENES


@pytest.fixture
def r3() -> Chart:
    return Chart(("x", "y", "z"))


@pytest.fixture
def r4() -> Chart:
    return Chart(("x", "y", "u", "v"))


@pytest.fixture
def alpha(r3):
    """Standard contact form on R^3."""
    return parse_form("d z + x*d y", r3)


@pytest.fixture
def std_contact(alpha):
    return certify_contact(alpha)


@pytest.fixture
def omega_r4(r4):
    return parse_form("d x ^ d y + d u ^ d v", r4)


@pytest.fixture
def product_r4() -> ProductChart:
    return ProductChart(("s",), ("x", "y", "z"))
