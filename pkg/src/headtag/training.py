"""Optimization and experiment protocols: Adam, multi-domain training,
random hyperparameter search with multi-seed retraining, decoder-head
selection, and k-fold cross-validation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from .data import Corpus, DomainId, partition_sizes
from .model import TaggerModel, loss_and_gradient, tag_sentence
from .rng import stream


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    dropout_rate: float = 0.1
    epochs: int = 3
    seed: int = 0
    batch_size: int = 32
    beta1: float = 0.99
    beta2: float = 0.999
    epsilon: float = 1e-8
    use_crf: bool = True
    # Without clipping, learning rates near the top of the search range blow
    # up the recurrent gradients; set to None to disable.
    clip_norm: float | None = 5.0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 <= self.dropout_rate <= 0.4:
            raise ValueError("dropout_rate must be in [0, 0.4]")
        if not 2 <= self.epochs <= 6:
            raise ValueError("epochs must be in [2, 6]")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "dropout_rate": self.dropout_rate,
            "epochs": self.epochs,
            "seed": self.seed,
            "batch_size": self.batch_size,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "epsilon": self.epsilon,
            "use_crf": self.use_crf,
            "clip_norm": self.clip_norm,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "TrainConfig":
        known = {k: data[k] for k in cls().to_dict() if k in data}
        return cls(**known)


@dataclass
class SearchSpace:
    lr_exponent_range: tuple[float, float] = (-5.5, -1.0)
    dropout_range: tuple[float, float] = (0.0, 0.4)
    epoch_range: tuple[int, int] = (2, 6)
    budget: int = 10
    seeds_per_trial: int = 3

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.seeds_per_trial < 1:
            raise ValueError("seeds_per_trial must be >= 1")
        if self.lr_exponent_range[0] > self.lr_exponent_range[1]:
            raise ValueError("lr exponent range reversed")

    @classmethod
    def from_dict(cls, data: Mapping) -> "SearchSpace":
        kwargs = {}
        for key in ("lr_exponent_range", "dropout_range", "epoch_range"):
            if key in data:
                kwargs[key] = tuple(data[key])
        for key in ("budget", "seeds_per_trial"):
            if key in data:
                kwargs[key] = int(data[key])
        return cls(**kwargs)


@dataclass
class AdamState:
    step_count: int
    first_moment: dict[str, np.ndarray]
    second_moment: dict[str, np.ndarray]

    @classmethod
    def zeros(cls, params: Mapping[str, np.ndarray]) -> "AdamState":
        return cls(
            step_count=0,
            first_moment={k: np.zeros_like(v) for k, v in params.items()},
            second_moment={k: np.zeros_like(v) for k, v in params.items()},
        )


def adam_step(
    params: dict[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    state: AdamState,
    config: TrainConfig,
) -> tuple[dict[str, np.ndarray], AdamState]:
    """Bias-corrected Adam update, in place on params and state."""
    state.step_count += 1
    t = state.step_count
    b1, b2 = config.beta1, config.beta2
    bc1 = 1.0 - b1**t
    bc2 = 1.0 - b2**t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} != param shape {p.shape} for {name!r}")
        m = state.first_moment[name]
        v = state.second_moment[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= config.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + config.epsilon)
    return params, state


def clip_gradients(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Scale all gradients so the global L2 norm is at most max_norm."""
    total = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if total > max_norm and total > 0:
        factor = max_norm / total
        for g in grads.values():
            g *= factor
    return total


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    val_token_accuracy: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "train_loss": self.train_loss,
            "val_token_accuracy": self.val_token_accuracy,
        }


def token_accuracy(corpus: Corpus, model: TaggerModel, domain: DomainId | str) -> float:
    correct = 0
    for sentence in corpus:
        pred = tag_sentence(model, sentence, domain)
        correct += sum(p == g for p, g in zip(pred, sentence.tags))
    return correct / corpus.token_count


def train(
    model: TaggerModel,
    train_corpora: Sequence[Corpus],
    val_corpora: Sequence[Corpus],
    config: TrainConfig,
) -> tuple[TaggerModel, list[EpochStats]]:
    """Seeded mini-batch training over the concatenated corpora.

    Every epoch reshuffles the pooled sentences, routes each one to its
    domain's decoder head, and applies one Adam step per batch.  History
    records the mean train loss and per-domain validation token accuracy.
    """
    if not train_corpora:
        raise ValueError("no training corpora")
    pool: list[tuple] = []
    for corpus in train_corpora:
        model.resolve_domain(corpus.domain)
        for sentence in corpus:
            if not sentence.is_tagged:
                raise ValueError(f"untagged training sentence {sentence.id!r}")
            pool.append((sentence, corpus.domain))
    for corpus in val_corpora:
        model.resolve_domain(corpus.domain)

    state = AdamState.zeros(model.params)
    history: list[EpochStats] = []
    n = len(pool)
    for epoch in range(1, config.epochs + 1):
        order = stream(config.seed, f"shuffle-epoch-{epoch}").permutation(n)
        dropout_rng = stream(config.seed, f"dropout-epoch-{epoch}")
        loss_sum = 0.0
        for lo in range(0, n, config.batch_size):
            batch = [pool[i] for i in order[lo : lo + config.batch_size]]
            loss, grads = loss_and_gradient(model, batch, config.dropout_rate, dropout_rng)
            if config.clip_norm is not None:
                clip_gradients(grads, config.clip_norm)
            adam_step(model.params, grads, state, config)
            loss_sum += loss * len(batch)
        val_acc = {
            c.domain.name: token_accuracy(c, model, c.domain) for c in val_corpora if len(c)
        }
        history.append(EpochStats(epoch, loss_sum / n, val_acc))
    return model, history


def sample_config(space: SearchSpace, rng: np.random.Generator) -> TrainConfig:
    """Draw one configuration: log-uniform learning rate, uniform dropout,
    uniform integer epochs."""
    exponent = rng.uniform(*space.lr_exponent_range)
    dropout = rng.uniform(*space.dropout_range)
    epochs = int(rng.integers(space.epoch_range[0], space.epoch_range[1] + 1))
    return TrainConfig(learning_rate=10.0**exponent, dropout_rate=dropout, epochs=epochs)


@dataclass
class TrialResult:
    config: TrainConfig
    seeds: list[int]
    per_seed_val_token_acc: list[float]
    mean: float
    stddev: float
    selected_head: DomainId
    per_seed_history: list[list[EpochStats]] = field(default_factory=list, repr=False)
    model: TaggerModel | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "seeds": self.seeds,
            "per_seed_val_token_acc": self.per_seed_val_token_acc,
            "mean": self.mean,
            "stddev": self.stddev,
            "selected_head": self.selected_head.name,
        }


def select_decoder_head(model: TaggerModel, val_corpus: Corpus) -> DomainId:
    """Head with the best token accuracy on the validation corpus; ties go
    to the lower domain index."""
    if not model.domains:
        raise ValueError("model has no decoder heads")
    if len(val_corpus) == 0:
        raise ValueError("empty validation corpus")
    best: DomainId | None = None
    best_acc = -1.0
    for domain in sorted(model.domains.values(), key=lambda d: d.index):
        acc = token_accuracy(val_corpus, model, domain)
        if acc > best_acc:
            best, best_acc = domain, acc
    return best


RunFn = Callable[
    [TrainConfig, int],
    tuple["TaggerModel | None", float, DomainId, list[EpochStats]],
]


def random_search(
    space: SearchSpace,
    model_factory: Callable[[int], TaggerModel],
    train_corpora: Sequence[Corpus],
    val_corpora: Sequence[Corpus],
    selection_domain: DomainId | str,
    base_seed: int = 0,
    run_fn: RunFn | None = None,
) -> tuple[TrialResult, list[TrialResult]]:
    """Seeded random search: `budget` sampled configs, each retrained with
    seeds {base, base+1, ...}; trials score by mean validation token
    accuracy on the selection domain.  Ties keep the earlier trial.

    `run_fn(config, seed)` can replace the default train-and-score routine
    (mainly for tests); it returns (model, accuracy, head_used).
    """
    sel_name = (
        selection_domain.name if isinstance(selection_domain, DomainId) else selection_domain
    )
    selection_val = next((c for c in val_corpora if c.domain.name == sel_name), None)
    if selection_val is None or len(selection_val) == 0:
        raise ValueError(f"no validation corpus for selection domain {sel_name!r}")

    def default_run(config: TrainConfig, seed: int):
        model = model_factory(seed)
        run_config = replace(config, seed=seed, use_crf=model.use_crf)
        model, history = train(model, train_corpora, val_corpora, run_config)
        if sel_name in model.domains:
            head = model.domains[sel_name]
        else:
            head = select_decoder_head(model, selection_val)
        return model, token_accuracy(selection_val, model, head), head, history

    run = run_fn or default_run
    sampler = stream(base_seed, "search-configs")
    trials: list[TrialResult] = []
    for _trial in range(space.budget):
        config = sample_config(space, sampler)
        seeds = [base_seed + k for k in range(space.seeds_per_trial)]
        accs: list[float] = []
        models: list[TaggerModel | None] = []
        heads: list[DomainId] = []
        histories: list[list[EpochStats]] = []
        for seed in seeds:
            model, acc, head, history = run(config, seed)
            accs.append(acc)
            models.append(model)
            heads.append(head)
            histories.append(history)
        best_seed_idx = int(np.argmax(accs))
        trials.append(
            TrialResult(
                config=config,
                seeds=seeds,
                per_seed_val_token_acc=accs,
                mean=float(np.mean(accs)),
                stddev=float(np.std(accs)),
                selected_head=heads[best_seed_idx],
                per_seed_history=histories,
                model=models[best_seed_idx],
            )
        )
    best = max(trials, key=lambda t: t.mean)  # max keeps the first on ties
    for trial in trials:
        if trial is not best:
            trial.model = None
    return best, trials


@dataclass
class FoldMetrics:
    fold: int
    token_accuracy: float
    sequence_accuracy: float


@dataclass
class CrossValidationResult:
    folds: list[FoldMetrics]
    mean_token_accuracy: float
    mean_sequence_accuracy: float

    def to_dict(self) -> dict:
        return {
            "folds": [
                {
                    "fold": f.fold,
                    "token_accuracy": f.token_accuracy,
                    "sequence_accuracy": f.sequence_accuracy,
                }
                for f in self.folds
            ],
            "mean_token_accuracy": self.mean_token_accuracy,
            "mean_sequence_accuracy": self.mean_sequence_accuracy,
        }


TrainFoldFn = Callable[[Corpus, Corpus, int], Callable]


def cross_validate(
    corpus: Corpus,
    model_factory: Callable[[int], TaggerModel] | None,
    config_or_space: TrainConfig | SearchSpace,
    k: int = 5,
    fractions: tuple[float, float, float] = (0.6, 0.2, 0.2),
    seed: int = 0,
    train_fold_fn: TrainFoldFn | None = None,
) -> CrossValidationResult:
    """k-fold protocol: rotate contiguous test windows over one seeded
    shuffle; the remainder splits into train/validation by the given
    fractions.  Reports per-fold and mean token/sequence accuracy.

    `train_fold_fn(train, val, fold_seed)` may replace the default
    train-then-tag routine; it returns a predictor mapping a Sentence to a
    tag list.
    """
    n = len(corpus)
    if n < k:
        raise ValueError(f"corpus of {n} sentences cannot make {k} folds")
    if len(fractions) != 3 or abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("fractions must be (train, val, test) summing to 1")
    perm = stream(seed, "cv-shuffle").permutation(n)
    shuffled = [corpus.sentences[i] for i in perm]
    window_sizes = partition_sizes(n, [1.0 / k] * k)

    def default_train_fold(train_c: Corpus, val_c: Corpus, fold_seed: int):
        if isinstance(config_or_space, SearchSpace):
            best, _ = random_search(
                config_or_space,
                model_factory,
                [train_c],
                [val_c],
                corpus.domain,
                base_seed=fold_seed,
            )
            model, head = best.model, best.selected_head
        else:
            model = model_factory(fold_seed)
            run_config = replace(config_or_space, seed=fold_seed, use_crf=model.use_crf)
            model, _ = train(model, [train_c], [val_c], run_config)
            head = corpus.domain
        return lambda sentence: tag_sentence(model, sentence, head)

    run_fold = train_fold_fn or default_train_fold
    folds: list[FoldMetrics] = []
    offset = 0
    for fold, size in enumerate(window_sizes):
        test_sents = shuffled[offset : offset + size]
        rest = shuffled[:offset] + shuffled[offset + size :]
        offset += size
        tv = partition_sizes(len(rest), [fractions[0] / (fractions[0] + fractions[1]),
                                         fractions[1] / (fractions[0] + fractions[1])])
        train_c = Corpus(tuple(rest[: tv[0]]), corpus.domain)
        val_c = Corpus(tuple(rest[tv[0] :]), corpus.domain)
        test_c = Corpus(tuple(test_sents), corpus.domain)
        predict = run_fold(train_c, val_c, seed + fold)
        tok_correct = 0
        seq_correct = 0
        for sentence in test_c:
            pred = predict(sentence)
            hits = sum(p == g for p, g in zip(pred, sentence.tags))
            tok_correct += hits
            seq_correct += int(hits == len(sentence))
        folds.append(
            FoldMetrics(
                fold=fold,
                token_accuracy=tok_correct / test_c.token_count,
                sequence_accuracy=seq_correct / len(test_c),
            )
        )
    return CrossValidationResult(
        folds=folds,
        mean_token_accuracy=float(np.mean([f.token_accuracy for f in folds])),
        mean_sequence_accuracy=float(np.mean([f.sequence_accuracy for f in folds])),
    )
