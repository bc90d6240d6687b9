import numpy as np
import pytest

from chronorisk.errors import CapacityError, InvalidInputError, StateError
from chronorisk.explain import build_groups, explain_record
from chronorisk.explain.record_explainer import (
    DEMOGRAPHIC,
    LAB_ANALYTE,
    OTHER_TEXT_NAME,
    TOKEN_SPAN,
)
from chronorisk.records import Demographics, DiseaseLabels, LabPanel, PatientRecord

from conftest import build_model


@pytest.fixture(scope="module")
def model():
    return build_model(seed=14)


@pytest.fixture
def record():
    return PatientRecord(
        patient_id="E001",
        note="thirst and fatigue",
        labs=LabPanel(np.array([1.5, -0.2, 0.0, 0.8]),
                      np.array([True, True, False, True])),
        demo=Demographics(59, "female"),
    )


def test_groups_cover_tokens_analytes_and_demo(model, record):
    groups = build_groups(model, record)
    by_kind = {}
    for g in groups:
        by_kind.setdefault(g.kind, []).append(g)
    assert len(by_kind[TOKEN_SPAN]) == 3          # thirst, and, fatigue
    assert len(by_kind[LAB_ANALYTE]) == 3         # three measured analytes
    assert len(by_kind[DEMOGRAPHIC]) == 1
    assert len({g.name for g in groups}) == len(groups)


def test_token_group_spans_point_into_note(model, record):
    for g in build_groups(model, record):
        if g.kind == TOKEN_SPAN:
            for (start, end) in g.spans:
                assert record.note[start:end].lower() == g.name.split("@")[0]


def test_long_note_pools_overflow_into_other_text(model):
    words = " ".join(f"word{i}" for i in range(30))
    rec = PatientRecord("E002", words, LabPanel.empty(4),
                        Demographics(50, "unknown"))
    groups = build_groups(model, rec)
    token_groups = [g for g in groups if g.kind == TOKEN_SPAN]
    named = [g for g in token_groups if g.name != OTHER_TEXT_NAME]
    other = [g for g in token_groups if g.name == OTHER_TEXT_NAME]
    assert len(named) == 12 and len(other) == 1
    covered = sorted(i for g in token_groups for i in g.indices)
    assert covered == list(range(16))     # l_max of the tiny model clips to 16
    assert len(other[0].indices) == 4


def test_duplicate_tokens_get_distinct_names(model):
    rec = PatientRecord("E003", "thirst thirst", LabPanel.empty(4),
                        Demographics(50, "unknown"))
    names = [g.name for g in build_groups(model, rec) if g.kind == TOKEN_SPAN]
    assert names[0] == "thirst" and names[1] == "thirst@1"


def test_exact_efficiency_axiom(model, record):
    for target in ("diabetes", "heart_disease", "horizon_180"):
        exp = explain_record(model, record, target, mode="exact")
        assert exp.mode == "exact"
        assert exp.phi_total() == pytest.approx(
            exp.prediction - exp.baseline_value, abs=1e-6
        )


def test_demo_only_record_is_a_one_player_game(model):
    rec = PatientRecord("E004", "", LabPanel.empty(4), Demographics(71, "male"))
    exp = explain_record(model, rec, "diabetes", mode="exact")
    assert len(exp.attributions) == 1
    only = exp.attributions[0]
    assert only.group.kind == DEMOGRAPHIC
    assert only.phi == pytest.approx(exp.prediction - exp.baseline_value,
                                     abs=1e-12)


def test_attributions_sorted_by_magnitude(model, record):
    exp = explain_record(model, record, "diabetes", mode="exact")
    mags = [abs(a.phi) for a in exp.attributions]
    assert mags == sorted(mags, reverse=True)


def test_auto_mode_picks_exact_for_small_and_sampled_for_large(model):
    small = PatientRecord("E005", "thirst", LabPanel.empty(4),
                          Demographics(50, "unknown"))
    assert explain_record(model, small, "diabetes").mode == "exact"

    big = PatientRecord(
        "E006", " ".join(f"word{i}" for i in range(16)),
        LabPanel(np.ones(4), np.ones(4, dtype=bool)), Demographics(50, "unknown"),
    )
    # 12 tokens + other-text + 4 analytes + demo = 18 groups
    exp = explain_record(model, big, "diabetes", n_permutations=30, seed=1)
    assert exp.mode == "sampled"
    assert exp.n_permutations == 30
    assert all(a.stderr is not None for a in exp.attributions)


def test_exact_mode_rejects_too_many_groups(model):
    big = PatientRecord(
        "E007", " ".join(f"word{i}" for i in range(16)),
        LabPanel(np.ones(4), np.ones(4, dtype=bool)), Demographics(50, "unknown"),
    )
    with pytest.raises(CapacityError):
        explain_record(model, big, "diabetes", mode="exact")


def test_sampled_mode_is_deterministic(model, record):
    a = explain_record(model, record, "diabetes", mode="sampled",
                       n_permutations=50, seed=3)
    b = explain_record(model, record, "diabetes", mode="sampled",
                       n_permutations=50, seed=3)
    assert [x.phi for x in a.attributions] == [x.phi for x in b.attributions]
    assert [x.group.name for x in a.attributions] == [x.group.name for x in b.attributions]


def test_baseline_and_prediction_match_direct_model_calls(model, record):
    exp = explain_record(model, record, "diabetes", mode="exact")
    assert exp.prediction == pytest.approx(
        model.predict(record).risks.p_diabetes, abs=1e-12
    )
    masked = PatientRecord(
        record.patient_id,
        "[UNK] [UNK] [UNK]",       # every token replaced by the unknown marker
        LabPanel.empty(4),
        Demographics(round(model.norm.age_mean), "unknown"),
    )
    # note text "[UNK]" tokenizes to the literal word "unk", which is OOV in
    # the tiny vocab and therefore maps to the unknown id anyway
    assert exp.baseline_value == pytest.approx(
        model.predict(masked).risks.p_diabetes, abs=1e-9
    )


def test_invalid_target_and_mode_rejected(model, record):
    with pytest.raises(InvalidInputError, match="target"):
        explain_record(model, record, "cancer")
    with pytest.raises(InvalidInputError, match="mode"):
        explain_record(model, record, "diabetes", mode="fast")


def test_missing_model_raises_state_error(record):
    with pytest.raises(StateError):
        explain_record(None, record, "diabetes")


def test_serialization_layout(model, record):
    doc = explain_record(model, record, "horizon_360", mode="exact").to_json_dict()
    assert doc["target"] == "horizon_360"
    assert set(doc) >= {"target", "baseline", "prediction", "mode", "attributions"}
    for a in doc["attributions"]:
        assert set(a) >= {"group_name", "kind", "phi"}
        assert isinstance(a["phi"], float)
    token_entries = [a for a in doc["attributions"] if a["kind"] == TOKEN_SPAN]
    assert all("spans" in a for a in token_entries)
