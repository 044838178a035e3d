import glob
import os

import pytest

from chorc.parser import parse_source

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CORPUS = os.path.join(ROOT, "corpus")


def corpus_paths():
    paths = sorted(glob.glob(os.path.join(CORPUS, "*.chor")))
    assert paths, "corpus directory is empty"
    return paths


def corpus_path(stem):
    """Resolve a corpus file by its numeric-prefix-free stem, e.g. 'buying'."""
    for path in corpus_paths():
        base = os.path.basename(path)
        if base.split("_", 1)[-1] == stem + ".chor":
            return path
    raise FileNotFoundError(stem)


def load(path):
    with open(path) as fh:
        return parse_source(fh.read())


def load_stem(stem):
    return load(corpus_path(stem))


@pytest.fixture(scope="session")
def corpus():
    """All corpus programs, parsed once: list of (path, decl, name, chor)."""
    out = []
    for path in corpus_paths():
        decl, name, ch = load(path)
        out.append((path, decl, name, ch))
    return out
