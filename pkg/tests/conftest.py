import pytest

from ecppdm.curve import ECPoint, make_domain, validate_curve
from ecppdm.ecelgamal import EncodingParams

# tiny prime-order domain: exhaustive wrong-key checks stay cheap
TINY = dict(p=23, a=1, b=4, gx=0, gy=2, order=29)
# small prime-order domain: exhaustive message/scalar roundtrips
SMALL = dict(p=199, a=0, b=3, gx=1, gy=2, order=211)
# pipeline-scale domain (order verified prime at construction)
BIG = dict(p=99999989, a=77570630, b=91434106, gx=1, gy=43293998, order=99981929)


def build_domain(spec):
    c = validate_curve(spec["p"], spec["a"], spec["b"])
    return make_domain(c, ECPoint(spec["gx"], spec["gy"]), spec["order"])


@pytest.fixture(scope="session")
def tiny_domain():
    return build_domain(TINY)


@pytest.fixture(scope="session")
def small_domain():
    return build_domain(SMALL)


@pytest.fixture(scope="session")
def big_domain():
    return build_domain(BIG)


@pytest.fixture(scope="session")
def enc2():
    return EncodingParams(k_pad=2)


@pytest.fixture(scope="session")
def enc20():
    return EncodingParams(k_pad=20)
