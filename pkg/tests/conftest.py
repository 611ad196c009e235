import pytest
import torch

from cluesum.corpus import Document, Sentence, Token


def doc_from_tokens(sentences, lang="en"):
    """Document built directly from pre-split token lists."""
    return Document(tuple(Sentence(i, tuple(Token(t) for t in toks)) for i, toks in enumerate(sentences)), lang)


@pytest.fixture(autouse=True)
def _single_thread():
    torch.set_num_threads(1)
    yield
