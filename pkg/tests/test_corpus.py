import csv

import pytest

import storytopics as st
from storytopics.errors import DuplicateIdError, MalformedRowError, MissingColumnError

from conftest import write_corpus_csv


def test_load_counts_and_ids(corpus):
    assert corpus.n == 24
    assert len(corpus) == 24
    assert [s.id for s in corpus][:3] == [1, 2, 3]
    assert corpus.index_of(13) == 12


def test_full_text_template(corpus):
    expected = (
        "As a pet owner, I want my smart home to let me know when the dog "
        "uses the doggy door, so that I can keep track of the pets whereabouts."
    )
    assert corpus.stories[0].full_text == expected


def test_make_full_text():
    assert st.make_full_text("r", "f", "b") == "As a r, I want f, so that b."


def test_domain_parsing(corpus):
    assert corpus.stories[0].domain is st.DomainLabel.HEALTH
    assert corpus.stories[3].domain is st.DomainLabel.SAFETY
    assert st.DomainLabel.parse("energy") is st.DomainLabel.ENERGY
    assert st.DomainLabel.parse(" ENTERTAINMENT ") is st.DomainLabel.ENTERTAINMENT
    # anything unrecognized lands in the catch-all class
    assert st.DomainLabel.parse("gardening") is st.DomainLabel.OTHER


def test_tags_split(corpus):
    assert corpus.stories[0].tags == ("Pets", "Dogs")
    assert corpus.stories[22].tags == ()


def test_histogram_always_all_domains(corpus):
    hist = st.domain_histogram(corpus)
    assert set(hist) == set(st.DomainLabel)
    assert sum(hist.values()) == corpus.n
    assert hist[st.DomainLabel.HEALTH] == 5


def test_missing_column(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("id,role,benefit,domain\n1,a,b,Health\n")
    with pytest.raises(MissingColumnError) as err:
        st.load_corpus(path)
    assert err.value.column == "feature"


def test_tags_column_optional(tmp_path):
    path = tmp_path / "notags.csv"
    path.write_text("id,role,feature,benefit,domain\n7,a,f,b,Energy\n")
    corpus = st.load_corpus(path)
    assert corpus.stories[0].tags == ()


def test_duplicate_id(tmp_path):
    path = tmp_path / "dup.csv"
    rows = [("5", "a", "f", "b", "Health", ""), ("5", "c", "g", "d", "Energy", "")]
    write_corpus_csv(path, rows)
    with pytest.raises(DuplicateIdError) as err:
        st.load_corpus(path)
    assert err.value.story_id == 5


def test_short_row(tmp_path):
    path = tmp_path / "short.csv"
    path.write_text("id,role,feature,benefit,domain\n1,a,f,b,Health\n2,a,f\n")
    with pytest.raises(MalformedRowError) as err:
        st.load_corpus(path)
    assert err.value.line_no == 3


def test_non_integer_id(tmp_path):
    path = tmp_path / "badid.csv"
    path.write_text("id,role,feature,benefit,domain\nxyz,a,f,b,Health\n")
    with pytest.raises(MalformedRowError) as err:
        st.load_corpus(path)
    assert err.value.line_no == 2


def test_column_mapping_override(tmp_path):
    path = tmp_path / "renamed.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["key", "who", "what", "why", "area"])
        writer.writerow(["3", "viewer", "a screen", "I watch shows", "Entertainment"])
    mapping = st.ColumnMapping(
        id="key", role="who", feature="what", benefit="why", domain="area"
    )
    corpus = st.load_corpus(path, mapping=mapping)
    assert corpus.stories[0].role == "viewer"
    assert corpus.stories[0].domain is st.DomainLabel.ENTERTAINMENT


def test_quoted_fields_with_commas(tmp_path):
    path = tmp_path / "quoted.csv"
    path.write_text(
        'id,role,feature,benefit,domain\n'
        '1,"busy, tired person","lights, fans and blinds to react","I relax, finally",Other\n'
    )
    corpus = st.load_corpus(path)
    assert corpus.stories[0].role == "busy, tired person"
    assert "fans and blinds" in corpus.stories[0].feature
