import numpy as np
import pytest

from chronorisk.model import Hyperparams, Model, NormStats, init_params
from chronorisk.records import Demographics, DiseaseLabels, LabPanel, PatientRecord
from chronorisk.vocab import EMPTY_TOKEN, UNK_TOKEN, Vocabulary


def build_vocab(words):
    return Vocabulary([EMPTY_TOKEN, UNK_TOKEN] + sorted(set(words)))


def build_norm(k, age_mean=50.0):
    return NormStats(
        mean=np.zeros(k), std=np.ones(k), constant=np.zeros(k, dtype=bool),
        age_mean=age_mean,
    )


def build_model(hp=None, seed=0, words=("fatigue", "thirst", "cough", "checkup")):
    hp = hp or Hyperparams(d=8, n_heads=2, ff_dim=8, lab_hidden=8,
                           n_analytes=4, l_max=16, vocab_size=2)
    vocab = build_vocab(words)
    hp = Hyperparams(**{**hp.as_dict(), "vocab_size": len(vocab)})
    params = init_params(hp, np.random.default_rng(seed))
    return Model(hyper=hp, params=params, vocab=vocab, norm=build_norm(hp.n_analytes))


@pytest.fixture
def tiny_model():
    return build_model()


@pytest.fixture
def tiny_record():
    return PatientRecord(
        patient_id="T001",
        note="thirst and fatigue at checkup",
        labs=LabPanel(np.array([1.2, -0.4, 0.0, 2.0]),
                      np.array([True, True, False, True])),
        demo=Demographics(61, "female"),
        labels=DiseaseLabels(True, False, False),
        onset_day=120,
    )
