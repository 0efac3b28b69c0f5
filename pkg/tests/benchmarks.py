"""Shared synthetic benchmarks for trainer and end-to-end tests.

Two fixed geometries:

* Long-tail: 5 classes with counts 9000/400/300/200/100 in d=20. Benign is a
  compact cluster (cov 0.5) at the origin; each attack sits on its own axis
  at 2.5, so attacks overlap benign but not each other. Plain cross-entropy
  under-detects the tail attacks here, which is what the attack-sharing
  comparisons need.
* Separable 3-class: class means 6 sigma apart on distinct axes, an easy
  sanity benchmark.

Train and eval sets share the class means but use distinct rng streams.
"""

from imba_ids import TrainConfig, make_rng
from imba_ids.data import SynthClass, SynthSpec, synth_generate

# Training-split class counts of the three standard IDS benchmarks.
KDD99_CLASSES = ("benign", "dos", "probing", "u2r", "r2l")
KDD99_TRAIN_COUNTS = (972781, 3883390, 41102, 52, 1106)
CICIDS17_CLASSES = ("benign", "dos", "ddos", "bruteforce", "infiltration")
CICIDS17_TRAIN_COUNTS = (1911674, 170508, 101024, 10494, 149934)
CICIDS18_CLASSES = ("benign", "dos", "infiltration", "botnet")
CICIDS18_TRAIN_COUNTS = (4197451, 517691, 131844, 233085)

LONGTAIL_NAMES = ("benign", "a1", "a2", "a3", "a4")
LONGTAIL_TRAIN_COUNTS = (9000, 400, 300, 200, 100)
LONGTAIL_EVAL_COUNTS = (3600, 160, 120, 80, 40)
LONGTAIL_DIM = 20

# SGD rather than the adaptive optimizer: per-coordinate gradient
# normalization cancels the loss-level amplification the attack-sharing
# comparison is about, so the adaptive method washes out the effect.
LONGTAIL_CONFIG = TrainConfig(
    hidden_width=32,
    hidden_layers=2,
    keep_prob=0.8,
    lam=10.0,
    optimizer="sgd",
    learning_rate=0.03,
    epochs=20,
)


def _longtail_spec(counts):
    means = [tuple([0.0] * LONGTAIL_DIM)]
    covs = [0.5]
    for k in range(1, len(LONGTAIL_NAMES)):
        mu = [0.0] * LONGTAIL_DIM
        mu[k - 1] = 2.5
        means.append(tuple(mu))
        covs.append(1.0)
    return SynthSpec(
        dim=LONGTAIL_DIM,
        classes=tuple(
            SynthClass(name, count, mean=mu, cov=cov)
            for name, count, mu, cov in zip(LONGTAIL_NAMES, counts, means, covs)
        ),
        benign="benign",
    )


def make_longtail_pair(seed):
    """(train, eval) EncodedDatasets for the long-tail benchmark."""
    train = synth_generate(_longtail_spec(LONGTAIL_TRAIN_COUNTS), make_rng(seed, 101))
    evalds = synth_generate(_longtail_spec(LONGTAIL_EVAL_COUNTS), make_rng(seed, 102))
    return train, evalds


def make_separable3_pair(seed, counts=(3000, 1500, 1500), sep=6.0, dim=20):
    """(train, eval) for well-separated 3-class Gaussian clusters."""
    names = ("benign", "dos", "probe")
    means = []
    for k in range(3):
        mu = [0.0] * dim
        mu[k] = sep
        means.append(tuple(mu))

    def spec(cs):
        return SynthSpec(
            dim=dim,
            classes=tuple(SynthClass(n, c, mean=mu) for n, c, mu in zip(names, cs, means)),
            benign="benign",
        )

    eval_counts = tuple(max(1, c // 4) for c in counts)
    train = synth_generate(spec(counts), make_rng(seed, 201))
    evalds = synth_generate(spec(eval_counts), make_rng(seed, 202))
    return train, evalds
