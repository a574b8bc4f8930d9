"""Pytest configuration and fixtures."""

import json

import pytest

from slu.data import ASSISTANT, DRIVER, DialogueSession, Turn, build_vocab, encode_corpus
from slu.models import ContextualSLU
from slu.training import TrainConfig


def driver(text, tags, intent):
    tokens = text.split()
    assert len(tokens) == len(tags.split())
    return Turn(speaker=DRIVER, tokens=tokens, tags=tags.split(), intent=intent)


def assistant(text):
    return Turn(speaker=ASSISTANT, tokens=text.split())


def make_toy_sessions():
    """Four small tagged sessions over three domains."""
    return [
        DialogueSession('s1', ['schedule'], [
            driver('set a reminder for 6 pm', 'O O O O B-time I-time', 'schedule'),
            assistant('ok reminder set for 6 pm'),
            driver('thanks', 'O', 'schedule'),
        ]),
        DialogueSession('s2', ['weather'], [
            driver('will it rain in boston', 'O O O O B-location', 'weather'),
            assistant('no rain in boston today'),
            driver('what about tomorrow', 'O O B-date', 'weather'),
            assistant('tomorrow is sunny'),
        ]),
        DialogueSession('s3', ['navigate'], [
            driver('find the nearest gas station', 'O O B-distance B-poi_type I-poi_type', 'navigate'),
            assistant('chevron is 2 miles away'),
            driver('take me there', 'O O O', 'navigate'),
        ]),
        DialogueSession('s4', ['schedule'], [
            driver('when is my dentist appointment', 'O O O B-event I-event', 'schedule'),
            assistant('it is on monday'),
            driver('ok', 'O', 'schedule'),
        ]),
    ]


@pytest.fixture
def toy_sessions():
    """Tagged sessions covering the schedule, weather and navigate domains."""
    return make_toy_sessions()


@pytest.fixture
def toy_vocab(toy_sessions):
    return build_vocab(toy_sessions)


@pytest.fixture
def encoded_sessions(toy_sessions, toy_vocab):
    return encode_corpus(toy_sessions, toy_vocab)


@pytest.fixture
def make_model(toy_vocab):
    """Factory for tiny float64 models over the toy vocabulary."""
    def factory(variant, seed=0, embedding_dim=5, hidden=3):
        return ContextualSLU(
            variant,
            vocab_size=len(toy_vocab),
            n_intents=toy_vocab.n_intents,
            n_slots=toy_vocab.n_slots,
            embedding_dim=embedding_dim,
            hidden=hidden,
            seed=seed,
        )
    return factory


@pytest.fixture
def tiny_config():
    """Fast training settings over the toy corpus."""
    return TrainConfig(
        variant='sden_dagger',
        batch_size=4,
        max_epochs=2,
        early_stop_patience=None,
        embedding_dim=4,
        hidden_dim=3,
        dropout=0.1,
    )


def kvret_record(uuid, intent, turns):
    """A raw KVRET dialogue: ``turns`` is a list of (speaker, utterance, slots)."""
    dialogue = []
    for speaker, utterance, slots in turns:
        data = {'end_dialogue': False, 'utterance': utterance}
        if speaker == ASSISTANT:
            data['requested'] = {key: True for key in slots}
            data['slots'] = slots
        dialogue.append({'turn': speaker, 'data': data})
    return {
        'dialogue': dialogue,
        'scenario': {'kb': {'items': None}, 'task': {'intent': intent}, 'uuid': uuid},
    }


RAW_TRAIN = [
    kvret_record('t-1', 'schedule', [
        ('driver', 'Set a reminder for 6 pm.', {}),
        ('assistant', 'Reminder set for 6 pm.', {'time': '6 pm'}),
        ('driver', 'Thanks!', {}),
        ('assistant', "You're welcome.", {}),
    ]),
    kvret_record('t-2', 'weather', [
        ('driver', 'Will it rain in Boston this weekend?', {}),
        ('assistant', 'No rain in Boston this weekend.', {'location': 'Boston', 'date': 'this weekend'}),
    ]),
    kvret_record('t-3', 'navigate', [
        ('driver', 'Find me the nearest gas station', {}),
        ('assistant', 'Chevron is 2 miles away.', {'distance': 'nearest', 'poi_type': 'gas station'}),
        ('driver', 'Take me there please', {}),
        ('assistant', 'Setting the route now.', {}),
    ]),
    kvret_record('t-4', 'schedule', []),
]

RAW_DEV = [
    kvret_record('d-1', 'weather', [
        ('driver', 'Is it going to snow in Denver?', {}),
        ('assistant', 'Yes, on Monday.', {'location': 'Denver', 'weather_attribute': 'snow'}),
    ]),
]

RAW_TEST = [
    kvret_record('e-1', 'navigate', [
        ('driver', 'Where is the closest parking garage?', {}),
        ('assistant', 'Civic Center Garage is 4 miles away.', {'poi_type': 'parking garage', 'distance': 'closest'}),
    ]),
]


@pytest.fixture
def raw_kvret_dir(tmp_path):
    """Directory with the three KVRET split files (train has one empty dialogue)."""
    raw = tmp_path / 'raw'
    raw.mkdir()
    for name, records in (('train', RAW_TRAIN), ('dev', RAW_DEV), ('test', RAW_TEST)):
        with open(raw / f'kvret_{name}_public.json', 'w', encoding='utf-8') as f:
            json.dump(records, f)
    return raw
