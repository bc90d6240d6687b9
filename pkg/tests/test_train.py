import numpy as np
import pytest

from chronorisk.errors import ConfigurationError, InvalidInputError
from chronorisk.model import Hyperparams, TrainConfig, train
from chronorisk.model.train import validate_cohort_for_training
from chronorisk.records import Demographics, DiseaseLabels, LabPanel, PatientRecord

TINY = Hyperparams(d=8, n_heads=2, ff_dim=8, lab_hidden=8,
                   n_analytes=2, l_max=8, vocab_size=2)


def planted_cohort(n=50, seed=0):
    """Tiny cohort where disease status shows up in both note and labs."""
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        sick = i % 2 == 0
        note = ("thirst and blurred vision daily" if sick
                else "routine visit, feeling well")
        values = rng.normal(loc=(2.0 if sick else -2.0), scale=0.4, size=2)
        records.append(PatientRecord(
            patient_id=f"p{i:03d}",
            note=note,
            labs=LabPanel(values, np.ones(2, dtype=bool)),
            demo=Demographics(40 + (i % 30), "female" if i % 3 else "male"),
            labels=DiseaseLabels(sick, sick and i % 4 == 0, not sick and i % 5 == 0),
            onset_day=(30 + 6 * i) if sick else None,
        ))
    return records


def small_config(**over):
    base = dict(epochs=2, batch_size=8, learning_rate=1e-3,
                val_fraction=0.1, hyper=TINY)
    base.update(over)
    return TrainConfig(**base)


def test_zero_learning_rate_leaves_parameters_at_init():
    cohort = planted_cohort(20)
    model_a, _ = train(cohort, small_config(learning_rate=0.0, epochs=2), seed=5)
    model_b, _ = train(cohort, small_config(learning_rate=0.0, epochs=0), seed=5)
    for name in model_a.params:
        np.testing.assert_array_equal(model_a.params[name], model_b.params[name])


def test_same_seed_gives_bit_identical_parameters():
    cohort = planted_cohort(30)
    model_a, log_a = train(cohort, small_config(), seed=7)
    model_b, log_b = train(cohort, small_config(), seed=7)
    for name in model_a.params:
        np.testing.assert_array_equal(model_a.params[name], model_b.params[name])
    assert [e.train_loss for e in log_a.epochs] == [e.train_loss for e in log_b.epochs]


def test_different_seeds_give_different_parameters():
    cohort = planted_cohort(30)
    model_a, _ = train(cohort, small_config(), seed=1)
    model_b, _ = train(cohort, small_config(), seed=2)
    assert any(
        not np.array_equal(model_a.params[n], model_b.params[n])
        for n in model_a.params
    )


def test_planted_signal_cohort_loss_decreases_over_30_epochs():
    cohort = planted_cohort(50)
    _, log = train(cohort, small_config(epochs=30, val_fraction=0.0), seed=3)
    assert len(log.epochs) == 30
    assert log.epochs[-1].train_loss < log.epochs[0].train_loss


def test_degenerate_cohort_error_names_the_disease():
    cohort = planted_cohort(20)
    stripped = [
        PatientRecord(r.patient_id, r.note, r.labs, r.demo,
                      labels=DiseaseLabels(r.labels.diabetes, r.labels.heart_disease, False),
                      onset_day=r.onset_day)
        for r in cohort
    ]
    with pytest.raises(ConfigurationError, match="hypertension"):
        train(stripped, small_config(), seed=0)


def test_all_positive_disease_is_also_degenerate():
    cohort = planted_cohort(20)
    saturated = [
        PatientRecord(r.patient_id, r.note, r.labs, r.demo,
                      labels=DiseaseLabels(True, r.labels.heart_disease, r.labels.hypertension),
                      onset_day=r.onset_day)
        for r in cohort
    ]
    with pytest.raises(ConfigurationError, match="diabetes"):
        validate_cohort_for_training(saturated)


def test_unlabeled_records_rejected_with_ids():
    cohort = planted_cohort(10)
    cohort[3] = PatientRecord("p003", "note", LabPanel.empty(2),
                              Demographics(50, "unknown"))
    with pytest.raises(InvalidInputError, match="p003"):
        validate_cohort_for_training(cohort)


def test_empty_cohort_rejected():
    with pytest.raises(ConfigurationError):
        train([], small_config(), seed=0)


def test_log_records_split_sizes_and_val_loss():
    cohort = planted_cohort(40)
    _, log = train(cohort, small_config(val_fraction=0.25), seed=9)
    assert log.n_val == 10 and log.n_train == 30
    assert all(e.val_loss is not None for e in log.epochs)
    _, log2 = train(cohort, small_config(val_fraction=0.0), seed=9)
    assert log2.n_val == 0
    assert all(e.val_loss is None for e in log2.epochs)


def test_trained_model_carries_cohort_statistics():
    cohort = planted_cohort(30)
    model, _ = train(cohort, small_config(), seed=4)
    assert model.hyper.vocab_size == len(model.vocab)
    assert model.norm.mean.shape == (2,)
    assert not model.norm.constant.any()
    prediction = model.predict(cohort[0])
    assert 0.0 <= prediction.risks.p_diabetes <= 1.0


def test_config_validation():
    with pytest.raises(ConfigurationError):
        TrainConfig(epochs=-1)
    with pytest.raises(ConfigurationError):
        TrainConfig(batch_size=0)
    with pytest.raises(ConfigurationError):
        TrainConfig(val_fraction=1.0)
    with pytest.raises(ConfigurationError):
        TrainConfig(learning_rate=-0.1)
