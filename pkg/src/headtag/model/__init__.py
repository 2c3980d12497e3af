"""The non-contextual tagger: word+char embeddings, shared BiGRU encoder,
per-domain decoder heads with linear-chain CRF inference."""
from .crf import (
    crf_log_likelihood,
    crf_log_partition,
    crf_marginals,
    crf_nll_and_grads,
    path_score,
    softmax_decode,
    softmax_nll_and_grads,
    viterbi_decode,
)
from .io import load_model, model_from_json, model_to_json, save_model
from .network import embed_tokens, emissions, encode
from .params import (
    DomainHead,
    ModelDims,
    TaggerModel,
    apply_word_vectors,
    build_model,
    init_params,
    read_word_vectors,
    zero_grads,
)
from .tagger import loss_and_gradient, tag_corpus, tag_sentence

__all__ = [
    "DomainHead",
    "ModelDims",
    "TaggerModel",
    "apply_word_vectors",
    "build_model",
    "crf_log_likelihood",
    "crf_log_partition",
    "crf_marginals",
    "crf_nll_and_grads",
    "embed_tokens",
    "emissions",
    "encode",
    "init_params",
    "load_model",
    "loss_and_gradient",
    "model_from_json",
    "model_to_json",
    "path_score",
    "read_word_vectors",
    "save_model",
    "softmax_decode",
    "softmax_nll_and_grads",
    "tag_corpus",
    "tag_sentence",
    "viterbi_decode",
    "zero_grads",
]
