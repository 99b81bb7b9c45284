import pytest
import torch
from transformers import BertConfig, BertModel, BertTokenizer

VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "hello", "world", "how", "are", "you", "i", "am", "fine", "thanks",
    "what", "is", "the", "weather", "like", "today", "good", "morning",
    "see", "later", "bye", "a", "b", "c",
]

HIDDEN_SIZE = 32


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    """A small randomly initialized encoder saved to disk; loads offline."""
    root = tmp_path_factory.mktemp("tiny_model")
    vocab_file = root / "vocab.txt"
    vocab_file.write_text("\n".join(VOCAB) + "\n", encoding="utf-8")
    tokenizer = BertTokenizer(vocab_file=str(vocab_file))
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=HIDDEN_SIZE,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=24,
    )
    torch.manual_seed(0)
    model = BertModel(config)
    model.eval()
    model_dir = root / "model"
    model.save_pretrained(model_dir)
    tokenizer.save_pretrained(model_dir)
    return str(model_dir)


@pytest.fixture
def pair_tsv(tmp_path):
    lines = [
        "hello world\thow are you",
        "i am fine\tthanks",
        "what is the weather\tlike today",
        "good morning\thello",
        "see you later\tbye",
        "hello\thello world",
        "how are you\ti am fine thanks",
        "good morning world\thow are you today",
        "a b c\ta b",
        "the weather is good\tsee you later",
    ]
    path = tmp_path / "pairs.tsv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
