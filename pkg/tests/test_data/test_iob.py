"""Tests for IOB tag derivation from slot values."""

import pytest

from slu.data import derive_iob


def test_reminder_time_span():
    tokens = 'set a reminder for 6 pm'.split()
    assert derive_iob(tokens, {'time': '6 pm'}) == ['O', 'O', 'O', 'O', 'B-time', 'I-time']


def test_matching_is_case_insensitive():
    assert derive_iob(['rain', 'in', 'Boston'], {'location': 'BOSTON'}) == ['O', 'O', 'B-location']


def test_value_is_tokenized_like_the_utterance():
    tokens = ['remind', 'me', 'at', '6pm', '.']
    assert derive_iob(tokens, {'time': '6PM.'}) == ['O', 'O', 'O', 'B-time', 'I-time']


def test_unmatched_values_are_reported():
    missing = []
    tags = derive_iob(['take', 'me', 'home'], {'poi': 'home', 'distance': 'nearest'}, unmatched=missing)
    assert tags == ['O', 'O', 'B-poi']
    assert missing == ['distance']


def test_longest_span_wins_overlaps():
    missing = []
    tags = derive_iob(['nearest', 'gas', 'station'], {'poi': 'station', 'poi_type': 'gas station'}, unmatched=missing)
    assert tags == ['O', 'B-poi_type', 'I-poi_type']
    assert missing == ['poi']


def test_equal_spans_resolved_by_slot_name():
    missing = []
    assert derive_iob(['monday'], {'date': 'monday', 'day': 'monday'}, unmatched=missing) == ['B-date']
    assert missing == ['day']


def test_repeated_value_of_one_slot_is_not_a_loss():
    missing = []
    assert derive_iob(['lunch', 'today'], {'event': ['lunch', 'Lunch']}, unmatched=missing) == ['B-event', 'O']
    assert missing == []


def test_leftmost_occurrence_only():
    assert derive_iob(['x', 'y', 'x'], {'s': 'x'}) == ['B-s', 'O', 'O']


def test_list_values():
    tags = derive_iob(['lunch', 'or', 'dinner'], {'event': ['dinner', 'lunch']})
    assert tags == ['B-event', 'O', 'B-event']


def test_non_string_values_ignored():
    assert derive_iob(['ok'], {'count': 5, 'empty': ''}) == ['O']


def test_empty_utterance():
    with pytest.raises(ValueError):
        derive_iob([], {'time': '6 pm'})
