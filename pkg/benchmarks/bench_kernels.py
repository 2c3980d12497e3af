"""Benchmark the compiled sequence kernels against the NumPy fallback.

Times the GRU recurrence (forward + backward) and the CRF forward/Viterbi
passes on tagging-shaped workloads, then an end-to-end training step.

    python3 benchmarks/bench_kernels.py [--repeats 5]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from headtag.kernels import reference

try:
    from headtag.kernels import _core as compiled
except ImportError:
    compiled = None


def _time(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_gru(backend, repeats: int, T=20, H=100, batch=50) -> tuple[float, float]:
    rng = np.random.default_rng(0)
    gi = rng.normal(size=(T, 3 * H))
    w_hh = rng.normal(size=(3 * H, H)) * 0.1
    b_hh = rng.normal(size=3 * H) * 0.1
    h0 = np.zeros(H)
    dh = rng.normal(size=(T, H))

    h, r, z, n, ghn = backend.gru_forward(gi, w_hh, b_hh, h0)

    def fwd():
        for _ in range(batch):
            backend.gru_forward(gi, w_hh, b_hh, h0)

    def bwd():
        for _ in range(batch):
            backend.gru_backward(dh, h, r, z, n, ghn, w_hh, h0)

    return _time(fwd, repeats) / batch, _time(bwd, repeats) / batch


def bench_crf(backend, repeats: int, T=20, K=17, batch=200) -> tuple[float, float]:
    rng = np.random.default_rng(1)
    e = rng.normal(size=(T, K))
    trans = rng.normal(size=(K, K))
    start = rng.normal(size=K)
    end = rng.normal(size=K)

    def fwd():
        for _ in range(batch):
            backend.crf_forward(e, trans, start, end)

    def vit():
        for _ in range(batch):
            backend.viterbi(e, trans, start, end)

    return _time(fwd, repeats) / batch, _time(vit, repeats) / batch


def bench_training_step(backend_name: str, repeats: int) -> float:
    import importlib
    import os

    os.environ["HEADTAG_KERNELS"] = backend_name
    import headtag.kernels
    import headtag.model.crf
    import headtag.model.network

    importlib.reload(headtag.kernels)
    importlib.reload(headtag.model.network)
    importlib.reload(headtag.model.crf)
    import headtag.model.tagger

    importlib.reload(headtag.model.tagger)

    from headtag.data import Corpus, DomainId, Sentence, Token, build_vocab
    from headtag.model.params import build_model
    from headtag.model.tagger import loss_and_gradient
    from headtag.tags import PosTag

    dom = DomainId("bench", 0)
    rng = np.random.default_rng(2)
    words = [f"w{i}" for i in range(200)]
    sentences = []
    for i in range(32):
        forms = [words[int(j)] for j in rng.integers(0, 200, size=12)]
        tags = [PosTag(int(t)) for t in rng.integers(0, 17, size=12)]
        sentences.append(
            Sentence(f"b{i}", tuple(Token(f, t) for f, t in zip(forms, tags)), dom)
        )
    corpus = Corpus(tuple(sentences), dom)
    model = build_model(build_vocab([corpus]), [dom], seed=0)
    batch = [(s, dom) for s in corpus]

    def step():
        loss_and_gradient(model, batch)

    return _time(step, repeats)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    backends = [("reference", reference)]
    if compiled is not None:
        backends.append(("compiled", compiled))
    else:
        print("compiled extension not built; timing the fallback only\n")

    results = {}
    for name, backend in backends:
        gf, gb = bench_gru(backend, args.repeats)
        cf, cv = bench_crf(backend, args.repeats)
        results[name] = (gf, gb, cf, cv)
        print(f"[{name}]")
        print(f"  gru forward   (T=20, H=100): {gf * 1e6:9.1f} us")
        print(f"  gru backward  (T=20, H=100): {gb * 1e6:9.1f} us")
        print(f"  crf forward   (T=20, K=17):  {cf * 1e6:9.1f} us")
        print(f"  viterbi       (T=20, K=17):  {cv * 1e6:9.1f} us")

    if compiled is not None:
        ref, com = results["reference"], results["compiled"]
        labels = ["gru forward", "gru backward", "crf forward", "viterbi"]
        print("\nspeedup (reference / compiled):")
        for label, r, c in zip(labels, ref, com):
            print(f"  {label:13s} {r / c:6.1f}x")

    print("\nfull training step, batch of 32 sentences:")
    for name in ("reference", "compiled") if compiled is not None else ("reference",):
        t = bench_training_step(name, args.repeats)
        print(f"  [{name}] {t * 1e3:8.1f} ms")


if __name__ == "__main__":
    main()
