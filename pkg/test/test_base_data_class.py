'''serialization, versioning and condition checks of the record base class'''
# pylint: disable=invalid-name
import json

import pytest
from pydantic import ValidationError

from patchdyn.base_data_class import (CSV_SCHEMA_TAG, SCHEMA_VERSION,
                                      BaseDataClass, SchemaVersionError,
                                      read_csv_header)
from patchdyn.model import ModelParams
from patchdyn.registry import ConditionViolationError, patchdyn_condition


class Interval(BaseDataClass):
    '''closed interval used to exercise the condition registry'''
    lo: float
    hi: float

    @patchdyn_condition
    def condition_0_ordered(self):
        '''lo must not exceed hi'''
        return self.lo <= self.hi


class LabelledInterval(Interval):
    label: str

    @patchdyn_condition
    def condition_0_label(self):
        return bool(self.label)


def test_condition_passes():
    '''an ordered interval validates'''
    assert not Interval(lo=0, hi=1).validate_model(raise_exc=False)


def test_condition_violation_raises():
    '''conditions are checked by validate_model'''
    interval = Interval(lo=2, hi=1)
    with pytest.raises(ConditionViolationError):
        interval.validate_model()
    assert len(interval.validate_conditions(raise_exc=False)) == 1


def test_inherited_conditions():
    '''conditions of base classes are checked as well'''
    bad = LabelledInterval(lo=2, hi=1, label='')
    assert len(bad.validate_conditions(raise_exc=False)) == 2


def test_records_are_frozen():
    '''fields cannot be reassigned; replace validates the copy'''
    interval = Interval(lo=0, hi=1)
    with pytest.raises(ValidationError):
        interval.lo = 3
    assert interval.replace(hi=5).hi == 5
    with pytest.raises(ValidationError):
        interval.replace(hi='wide')


def test_serialization_tags():
    '''documents carry the type and the schema version'''
    params = ModelParams(r=1.5, K1=5, K2=3, a1=0.25, a2=0.15, d1=0.2, d2=0.1)
    doc = json.loads(params.patchdyn_serialize())
    assert doc['@type'] == 'ModelParams'
    assert doc['@version'] == SCHEMA_VERSION
    assert ModelParams.patchdyn_deserialize(doc) == params


def test_foreign_version_rejected():
    '''deserialization refuses other schema versions'''
    doc = {'@type': 'Interval', '@version': 'patchdyn/0', 'lo': 0, 'hi': 1}
    with pytest.raises(SchemaVersionError):
        Interval.patchdyn_deserialize(doc)
    with pytest.raises(SchemaVersionError):
        Interval.patchdyn_deserialize({'lo': 0, 'hi': 1})
    with pytest.raises(ValueError):
        Interval.patchdyn_deserialize([0, 1])


def test_deserialize_checks_conditions():
    '''conditions are enforced on read'''
    doc = json.dumps({'@version': SCHEMA_VERSION, 'lo': 3, 'hi': 1})
    with pytest.raises(ConditionViolationError):
        Interval.patchdyn_deserialize(doc)
    assert Interval.patchdyn_deserialize(doc, validate_model=False).lo == 3


def test_csv_header():
    '''header entries are returned without the schema tag'''
    lines = [
        f'{CSV_SCHEMA_TAG} {SCHEMA_VERSION}', '# seed: 4', 't,x1,y1,x2,y2',
        '0,1,1,1,1'
    ]
    assert read_csv_header(lines) == {'seed': '4'}
    with pytest.raises(SchemaVersionError):
        read_csv_header([f'{CSV_SCHEMA_TAG} patchdyn/9', 't,x1'])
    with pytest.raises(SchemaVersionError):
        read_csv_header(['t,x1,y1,x2,y2'])

# EOF
