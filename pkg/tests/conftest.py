import numpy as np
import pytest

from attrex import classifier, data, sje


def random_softmax_model(rng, dim=6, n_classes=4, hidden=5):
    """A small random model; hidden=0 gives the linear variant."""
    if hidden > 0:
        w1 = rng.normal(size=(hidden, dim))
        w2 = rng.normal(size=(n_classes, hidden))
    else:
        w1 = np.zeros((0, dim))
        w2 = rng.normal(size=(n_classes, dim))
    return data.SoftmaxModel(
        w1=w1, b1=rng.normal(size=max(hidden, 0)) if hidden > 0 else np.zeros(0),
        w2=w2, b2=rng.normal(size=n_classes), hidden_width=hidden,
    )


@pytest.fixture(scope="session")
def blob_problem():
    return data.make_blob_problem(seed=7)


@pytest.fixture(scope="session")
def trained_models(blob_problem):
    """Softmax and embedding models trained on the session blob problem."""
    train, _, cam = blob_problem
    softmax_model, _ = classifier.train_softmax(train, classifier.SoftmaxTrainConfig(
        learning_rate=0.5, epochs=80, seed=7, batch_size=32, hidden_width=24,
        n_classes=cam.n_classes,
    ))
    sje_model, _ = sje.train(train, cam, sje.RankingLossConfig(
        learning_rate=0.05, epochs=60, seed=7,
    ))
    return softmax_model, sje_model
