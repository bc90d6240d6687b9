import numpy as np
import pytest

from chronorisk.errors import InvalidInputError
from chronorisk.model.gradcheck import grad_check
from chronorisk.records import Demographics, DiseaseLabels, LabPanel, PatientRecord

from conftest import build_model


@pytest.fixture(scope="module")
def checked_model():
    return build_model(seed=12)


@pytest.fixture(scope="module")
def labeled_record():
    # 4 text tokens, K=4 panel with one masked analyte, onset known
    return PatientRecord(
        patient_id="G001",
        note="thirst fatigue cough checkup",
        labs=LabPanel(np.array([0.8, -1.1, 0.0, 0.3]),
                      np.array([True, True, False, True])),
        demo=Demographics(58, "male"),
        labels=DiseaseLabels(True, False, True),
        onset_day=200,
    )


def test_every_tensor_is_checked(checked_model, labeled_record):
    report = grad_check(checked_model, labeled_record)
    assert set(report.max_rel_err) == set(checked_model.params)
    assert all(n >= 1 for n in report.checked_coords.values())
    # non-embedding tensors get at least the sampling quota (or full size)
    for name, tensor in checked_model.params.items():
        if name != "embed":
            assert report.checked_coords[name] >= min(20, tensor.size)


def test_tiny_model_passes_at_1e4(checked_model, labeled_record):
    report = grad_check(checked_model, labeled_record, tolerance=1e-4)
    assert report.passed, report.summary()
    assert report.worst < 1e-4


def test_no_onset_record_also_passes(checked_model):
    record = PatientRecord(
        patient_id="G002",
        note="cough",
        labs=LabPanel(np.array([0.0, 0.5, 0.5, 0.0]),
                      np.array([False, True, True, False])),
        demo=Demographics(43, "female"),
        labels=DiseaseLabels(False, False, False),
    )
    report = grad_check(checked_model, record, tolerance=1e-4)
    assert report.passed, report.summary()


def test_corrupted_gradient_is_flagged(checked_model, labeled_record):
    report = grad_check(checked_model, labeled_record, corrupt="lab_w1")
    assert "lab_w1" in report.flagged
    assert not report.passed
    assert "lab_w1" in report.summary()


@pytest.mark.parametrize("corrupt", ["embed", "fus_wq", "hor_w"])
def test_corruption_detected_across_tensor_kinds(checked_model, labeled_record, corrupt):
    report = grad_check(checked_model, labeled_record, corrupt=corrupt)
    assert corrupt in report.flagged


def test_unlabeled_record_rejected(checked_model):
    record = PatientRecord("G003", "cough", LabPanel.empty(4),
                           Demographics(50, "unknown"))
    with pytest.raises(InvalidInputError):
        grad_check(checked_model, record)


def test_nonpositive_tolerance_rejected(checked_model, labeled_record):
    with pytest.raises(InvalidInputError):
        grad_check(checked_model, labeled_record, tolerance=0.0)


def test_check_leaves_parameters_untouched(checked_model, labeled_record):
    before = {n: t.copy() for n, t in checked_model.params.items()}
    grad_check(checked_model, labeled_record)
    for name, tensor in checked_model.params.items():
        np.testing.assert_array_equal(tensor, before[name])
