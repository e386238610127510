"""DOI normalization: variant confluence, idempotence, rejection."""
from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from croci_engine import Doi, MalformedDoiError, doi_prefix, format_doi_url, normalize_doi

from conftest import doi_canonicals

CANONICAL = "10.1038/502295a"

VARIANTS = [
    "https://doi.org/10.1038/502295a",
    "http://doi.org/10.1038/502295a",
    "https://dx.doi.org/10.1038/502295a",
    "http://dx.doi.org/10.1038/502295a",
    "doi:10.1038/502295a",
    "DOI:10.1038/502295A",
    "info:doi/10.1038/502295a",
    "10.1038/502295a",
    "10.1038/502295A",
    "  10.1038/502295a  ",
    "HTTPS://DOI.ORG/10.1038/502295a",
    "10.1038%2F502295a",
    "https://doi.org/10.1038%2F502295a",
]


@pytest.mark.parametrize("variant", VARIANTS)
def test_variant_confluence(variant):
    assert normalize_doi(variant).canonical == CANONICAL


def test_fields_and_str():
    doi = normalize_doi(CANONICAL)
    assert doi.prefix == "10.1038"
    assert doi.suffix == "502295a"
    assert str(doi) == CANONICAL


@pytest.mark.parametrize(
    "raw",
    [
        "",
        "   ",
        "10.1038",
        "10.1038/",
        "10.1038/   ",
        "11.1038/x",
        "10.10/x",
        "10./x",
        "10.x123/y",
        "not-a-doi",
        "https://example.org/10.1038/502295a",
        "doi:doi:10.1038/502295a",
        "10.1038/a\x01b",
        "10.1038/a\tb",
    ],
)
def test_malformed_inputs(raw):
    with pytest.raises(MalformedDoiError):
        normalize_doi(raw)


def test_double_encoded_input_is_rejected():
    # after the single decode a decodable escape remains; accepting it
    # would leave a canonical form that re-normalizes differently
    with pytest.raises(MalformedDoiError):
        normalize_doi("10.1038%252F502295a")


def test_non_decodable_percent_stays_literal():
    doi = normalize_doi("10.1038/50%zz95a")
    assert doi.suffix == "50%zz95a"
    assert normalize_doi(doi.canonical) == doi


def test_scheme_stripped_exactly_once():
    # the scheme is part of the identifier once one copy is removed
    with pytest.raises(MalformedDoiError):
        normalize_doi("doi:https://doi.org/10.1038/502295a")


def test_multidot_prefix():
    doi = normalize_doi("10.1234.5/abc")
    assert doi.prefix == "10.1234.5"
    assert doi_prefix(doi) == "10.1234.5"


def test_suffix_preserves_unicode_lowercases_ascii_only():
    doi = normalize_doi("10.1038/ÉtudeX")
    assert doi.suffix == "Étudex"


def test_internal_space_is_opaque_suffix_content():
    doi = normalize_doi("10.1038/a b")
    assert doi.suffix == "a b"
    assert normalize_doi("10.1038/a%20b") == doi
    assert normalize_doi(doi.canonical) == doi


def test_prefix_examples():
    assert doi_prefix(normalize_doi("10.1108/JD-12-2013-0166")) == "10.1108"
    assert doi_prefix(normalize_doi("10.5281/zenodo.2558257")) == "10.5281"


def test_format_doi_url():
    doi = normalize_doi(CANONICAL)
    assert format_doi_url(doi) == "https://doi.org/10.1038/502295a"
    assert format_doi_url(normalize_doi("10.1038/d41586-018-00104-7")) == (
        "https://doi.org/10.1038/d41586-018-00104-7"
    )


def test_ordering_is_by_canonical():
    a = normalize_doi("10.1000/a")
    b = normalize_doi("10.1000/b")
    assert a < b
    assert sorted([b, a]) == [a, b]
    assert a == Doi(prefix="10.1000", suffix="a")


# -- property tests -----------------------------------------------------

_SCHEMES = [
    "",
    "https://doi.org/",
    "http://doi.org/",
    "https://dx.doi.org/",
    "http://dx.doi.org/",
    "doi:",
    "info:doi/",
]


@st.composite
def decorated(draw):
    canonical = draw(doi_canonicals())
    decorated = canonical
    if draw(st.booleans()):
        decorated = "".join(
            c.upper() if draw(st.booleans()) else c for c in decorated
        )
    if draw(st.booleans()):
        hexcase = str.upper if draw(st.booleans()) else str.lower
        decorated = "".join(
            hexcase(f"%{ord(c):02x}") if c != "%" and draw(st.booleans()) else c
            for c in decorated
        )
    scheme = draw(st.sampled_from(_SCHEMES))
    if draw(st.booleans()):
        scheme = "".join(c.upper() if draw(st.booleans()) else c for c in scheme)
    pad = draw(st.sampled_from(["", " ", "\t", "  "]))
    return canonical, pad + scheme + decorated + pad


@settings(max_examples=300, deadline=None)
@given(decorated())
def test_confluence_property(case):
    canonical, variant = case
    assert normalize_doi(variant).canonical == canonical


@settings(max_examples=200, deadline=None)
@given(doi_canonicals())
def test_idempotence_property(canonical):
    once = normalize_doi(canonical)
    again = normalize_doi(once.canonical)
    assert again == once
    assert again.canonical == once.canonical


@settings(max_examples=200, deadline=None)
@given(doi_canonicals())
def test_url_round_trip_property(canonical):
    doi = normalize_doi(canonical)
    assert normalize_doi(format_doi_url(doi)) == doi


@settings(max_examples=200, deadline=None)
@given(doi_canonicals())
def test_prefix_stability_property(canonical):
    doi = normalize_doi(canonical)
    assert doi.canonical.startswith(doi_prefix(doi) + "/")
