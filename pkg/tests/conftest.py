import pytest

from fontimp.vocab import MergeRules, RawTagRecord, TagVocabulary, build_vocabulary


@pytest.fixture
def simple_rules():
    return MergeRules(
        variant_map={"scifi": "sci fi", "science fiction": "sci fi"},
        compound_map={"comic cartoon": ("comic", "cartoon")},
    )


@pytest.fixture
def simple_vocab(simple_rules):
    records = [
        RawTagRecord.make("f1", ["sci fi", "horror"]),
        RawTagRecord.make("f2", ["scifi", "comic"]),
        RawTagRecord.make("f3", ["comic cartoon", "horror"]),
        RawTagRecord.make("f4", ["cartoon", "horror", "sci fi"]),
    ]
    return build_vocabulary(records, simple_rules, top_n=10, min_count=1)


@pytest.fixture
def ab_vocab():
    return TagVocabulary.from_counts({"a": 2, "b": 1})
