"""HTTP API: query endpoints and synchronous submissions."""
from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from croci_engine import CitationIndex, citation_view, create_app, normalize_doi

from conftest import ARCHIVE_REF, SUBMITTER

CSV_PAYLOAD = (
    "citing_id,citing_publication_date,cited_id,cited_publication_date\n"
    "10.1108/jd-12-2013-0166,2015-03-09,10.1038/502295a,2013-10\n"
    "10.1000/alpha,2016,10.1038/502295a,2013-10\n"
    "10.1000/alpha,,10.2000/beta,\n"
)

SCHOLIX_PAYLOAD = """
[
  {
    "RelationshipType": {"Name": "References"},
    "Source": {
      "Identifier": [{"ID": "10.5555/src", "IDScheme": "doi"}],
      "PublicationDate": "2018-05"
    },
    "Target": {
      "Identifier": [{"ID": "10.5555/dst", "IDScheme": "doi"}],
      "PublicationDate": "2014"
    }
  }
]
"""


@pytest.fixture()
def index():
    with CitationIndex() as idx:
        yield idx


@pytest.fixture()
def client(index):
    return TestClient(create_app(index))


def submit(client, payload=CSV_PAYLOAD, **overrides):
    body = {
        "archive_ref": ARCHIVE_REF,
        "submitter": SUBMITTER,
        "format": "csv",
        "payload": payload,
    }
    body.update(overrides)
    return client.post("/submissions", json=body)


def test_submission_and_counts(client):
    response = submit(client)
    assert response.status_code == 201
    report = response.json()
    assert report["added"] == 3
    assert report["duplicates_ignored"] == 0
    assert report["errors"] == 0
    assert report["row_errors"] == []
    assert report["archive_ref"] == ARCHIVE_REF

    assert client.get("/citation-count/10.1038%2F502295a").json() == {"count": 2}
    assert client.get("/reference-count/10.1000%2Falpha").json() == {"count": 2}


def test_resubmission_is_idempotent(client):
    submit(client)
    before = client.get("/citation-count/10.1038%2F502295a").json()
    response = submit(client)
    assert response.status_code == 201
    assert response.json()["added"] == 0
    assert response.json()["duplicates_ignored"] == 3
    assert client.get("/citation-count/10.1038%2F502295a").json() == before


def test_citation_bodies_match_index_views(client, index):
    submit(client)
    target = normalize_doi("10.1038/502295a")
    expected = [citation_view(c) for c in index.get_citations(target)]
    body = client.get("/citations/10.1038%2F502295a").json()
    assert body == expected
    assert [c["citing"] for c in body] == [
        "https://doi.org/10.1000/alpha",
        "https://doi.org/10.1108/jd-12-2013-0166",
    ]
    first = body[1]
    assert first["citing_date"] == "2015-03-09"
    assert first["cited_date"] == "2013-10"
    assert first["timespan"] == "P1Y5M"
    assert first["submitter"] == SUBMITTER
    assert first["archive_ref"] == ARCHIVE_REF


def test_references_endpoint(client):
    submit(client)
    body = client.get("/references/10.1000%2Falpha").json()
    assert [c["cited"] for c in body] == [
        "https://doi.org/10.1038/502295a",
        "https://doi.org/10.2000/beta",
    ]


def test_doi_surface_forms_are_equivalent(client):
    submit(client)
    canonical = client.get("/citation-count/10.1038%2F502295a").json()
    for variant in (
        "10.1038/502295a",  # raw path slash
        "doi%3A10.1038%2F502295a",
        "https%3A%2F%2Fdoi.org%2F10.1038%2F502295a",
        "10.1038%2F502295A",
    ):
        assert client.get(f"/citation-count/{variant}").json() == canonical


def test_unknown_doi_is_an_empty_answer(client):
    assert client.get("/citations/10.9999%2Funseen").json() == []
    assert client.get("/references/10.9999%2Funseen").json() == []
    assert client.get("/citation-count/10.9999%2Funseen").json() == {"count": 0}


def test_malformed_doi_is_400(client):
    response = client.get("/citations/not-a-doi")
    assert response.status_code == 400
    assert response.json()["error"] == "malformed-doi"
    assert client.get("/citation-count/11.1000%2Fx").status_code == 400


def test_scholix_submission(client):
    response = submit(client, payload=SCHOLIX_PAYLOAD, format="scholix")
    assert response.status_code == 201
    assert response.json()["added"] == 1
    body = client.get("/references/10.5555%2Fsrc").json()
    assert body[0]["cited"] == "https://doi.org/10.5555/dst"
    assert body[0]["timespan"] == "P4Y"


def test_row_errors_reported_but_good_rows_land(client):
    payload = (
        "citing_id,citing_publication_date,cited_id,cited_publication_date\n"
        "10.1000/a,2015,10.2000/b,2013\n"
        "junk,2015,10.2000/b,2013\n"
        "10.3000/c,2015,10.3000/c,2013\n"
    )
    response = submit(client, payload=payload)
    assert response.status_code == 201
    report = response.json()
    assert report["added"] == 1
    assert report["errors"] == 2
    assert {e["code"] for e in report["row_errors"]} == {
        "malformed-doi",
        "self-citation",
    }
    assert {e["row"] for e in report["row_errors"]} == {2, 3}


def test_file_level_rejection_leaves_index_unchanged(client, index):
    submit(client)
    before = index.total_citations()
    response = submit(client, payload="wrong,header\n10.1000/a,2015,10.2000/b,2013\n")
    assert response.status_code == 422
    assert response.json()["error"] == "wrong-column-count"
    assert index.total_citations() == before

    response = submit(client, payload="{not json", format="scholix")
    assert response.status_code == 422
    assert response.json()["error"] == "malformed-document"
    assert index.total_citations() == before


def test_size_cap_enforced(index):
    client = TestClient(create_app(index, size_cap=128))
    response = submit(client, payload="x" * 200)
    assert response.status_code == 413
    assert response.json()["error"] == "payload-too-large"
    assert index.total_citations() == 0


def test_invalid_orcid_rejected(client, index):
    response = submit(client, submitter="0000-0002-1825-0098")
    assert response.status_code == 400
    assert response.json()["error"] == "invalid-orcid"

    response = submit(client, submitter="not an orcid")
    assert response.status_code == 400
    assert response.json()["error"] == "invalid-orcid"
    assert index.total_citations() == 0


def test_missing_archive_ref_rejected(client, index):
    response = submit(client, archive_ref="   ")
    assert response.status_code == 400
    assert response.json()["error"] == "missing-archive-ref"
    assert index.total_citations() == 0


def test_unknown_format_fails_validation(client):
    assert submit(client, format="xml").status_code == 422


def test_fresh_app_defaults_to_private_index():
    client = TestClient(create_app())
    assert client.get("/citation-count/10.1000%2Fa").json() == {"count": 0}
    submit(client)
    assert client.get("/citation-count/10.1038%2F502295a").json() == {"count": 2}
