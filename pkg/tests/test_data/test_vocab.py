"""Tests for vocabularies and id-encoded sessions."""

from collections import Counter

import pytest

from slu.data import (
    PAD,
    PAD_ID,
    UNK,
    UNK_ID,
    DialogueSession,
    Turn,
    Vocab,
    build_vocab,
    encode_session,
    slot_type,
)

TOY_LABELS = [
    'O',
    'B-date', 'I-date',
    'B-distance', 'I-distance',
    'B-event', 'I-event',
    'B-location', 'I-location',
    'B-poi_type', 'I-poi_type',
    'B-time', 'I-time',
]


def test_reserved_ids(toy_vocab):
    assert toy_vocab.tokens[PAD_ID] == PAD
    assert toy_vocab.tokens[UNK_ID] == UNK
    assert toy_vocab.token_id('never-seen') == UNK_ID


def test_token_order_is_frequency_then_alphabetical(toy_sessions, toy_vocab):
    counts = Counter(tok for s in toy_sessions for t in s.turns for tok in t.tokens)
    ranked = toy_vocab.tokens[2:]
    assert set(ranked) == set(counts)
    keys = [(-counts[tok], tok) for tok in ranked]
    assert keys == sorted(keys)


def test_labels_and_intents(toy_vocab):
    assert toy_vocab.slot_labels == TOY_LABELS
    assert toy_vocab.intents == ['navigate', 'schedule', 'weather']
    assert toy_vocab.slot_types == ['date', 'distance', 'event', 'location', 'poi_type', 'time']
    assert toy_vocab.n_slots == 13
    assert toy_vocab.n_intents == 3


def test_min_freq_maps_rare_tokens_to_unk(toy_sessions):
    vocab = build_vocab(toy_sessions, min_freq=2)
    assert vocab.token_id('dentist') == UNK_ID
    assert vocab.token_id('is') != UNK_ID
    with pytest.raises(ValueError):
        build_vocab(toy_sessions, min_freq=0)


def test_label_sessions_add_labels_but_not_tokens(toy_sessions):
    extra = DialogueSession('x', ['traffic'], [
        Turn('driver', ['avoid', 'jams'], ['O', 'B-traffic_info'], 'traffic'),
    ])
    vocab = build_vocab(toy_sessions, label_sessions=[extra])
    assert 'B-traffic_info' in vocab.slot_labels
    assert 'traffic' in vocab.intents
    assert vocab.token_id('jams') == UNK_ID


def test_slot_type():
    assert slot_type('O') is None
    assert slot_type('B-time') == 'time'
    assert slot_type('I-poi_type') == 'poi_type'
    for bad in ('X-time', 'B-', 'time'):
        with pytest.raises(ValueError):
            slot_type(bad)


def test_vocab_validation():
    with pytest.raises(ValueError):
        Vocab(tokens=['a'], slot_labels=['O'], intents=[])
    with pytest.raises(ValueError):
        Vocab(tokens=[PAD, UNK], slot_labels=['B-x', 'O'], intents=[])
    with pytest.raises(ValueError):
        Vocab(tokens=[PAD, UNK], slot_labels=['O', 'I-x'], intents=[])
    with pytest.raises(ValueError):
        Vocab(tokens=[PAD, UNK, 'a', 'a'], slot_labels=['O'], intents=[])


def test_unknown_labels_raise(toy_vocab):
    with pytest.raises(ValueError, match='B-cuisine'):
        toy_vocab.slot_ids(['O', 'B-cuisine'])
    with pytest.raises(ValueError, match='music'):
        toy_vocab.intent_id('music')


def test_slot_ids_decode_back(toy_vocab):
    tags = ['O', 'B-time', 'I-time']
    assert toy_vocab.decode_slots(toy_vocab.slot_ids(tags)) == tags


def test_save_load_and_fingerprint(tmp_path, toy_vocab):
    path = tmp_path / 'vocab.json'
    toy_vocab.save(path)
    loaded = Vocab.load(path)
    assert loaded.tokens == toy_vocab.tokens
    assert loaded.fingerprint() == toy_vocab.fingerprint()
    changed = Vocab(tokens=toy_vocab.tokens, slot_labels=toy_vocab.slot_labels, intents=['other'])
    assert changed.fingerprint() != toy_vocab.fingerprint()


def test_encode_session_examples(toy_sessions, toy_vocab):
    weather = encode_session(toy_sessions[1], toy_vocab)
    assert weather.id == 's2'
    assert len(weather) == 4
    assert [ex.turn_index for ex in weather.examples] == [0, 2]
    second = weather.examples[1]
    assert second.history == weather.turns[:2]
    assert second.tokens == weather.turns[2]
    assert toy_vocab.intents[second.intent] == 'weather'
    assert toy_vocab.decode_slots(second.tags) == ['O', 'O', 'B-date']
    assert weather.examples[0].history == ()


def test_encode_session_with_unknown_label(toy_vocab):
    session = DialogueSession('z', ['music'], [Turn('driver', ['play'], ['B-song'], 'schedule')])
    with pytest.raises(ValueError):
        encode_session(session, toy_vocab)
