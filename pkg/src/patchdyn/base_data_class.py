'''Base class for all patchdyn records'''
import json
import logging
from typing import Any

from pydantic import BaseModel, ConfigDict, ValidationError

from patchdyn.registry import ConditionViolationError, get_conditions

SCHEMA_VERSION = 'patchdyn/1'
CSV_SCHEMA_TAG = '# patchdyn-schema:'


class SchemaVersionError(ValueError):
    '''Exception thrown when a document carries a foreign schema version'''


class BaseDataClass(BaseModel):
    ''' A base class for all patchdyn records. It is derived from
        `pydantic.BaseModel` which provides type checking at object creation.
        It provides as well the `validate_model` and `validate_conditions`
        methods which perform the registered cross-field condition checks.
        Instances are frozen; derive modified copies with `replace`.
    '''
    model_config = ConfigDict(extra='forbid',
                              frozen=True,
                              revalidate_instances='always',
                              arbitrary_types_allowed=True,
                              ser_json_inf_nan='constants')

    def replace(self, **changes):
        '''returns a validated copy with the given fields replaced'''
        data = self.model_dump()
        data.update(changes)
        return self.__class__.model_validate(data)

    def patchdyn_serialize(self,
                           *,
                           validate_model: bool = True,
                           indent: int | None = None,
                           exclude_none: bool = False) -> str:
        '''Serialization to a versioned json string.

        #### Args:
            `validate_model (bool, optional):` Validate the model including
            all registered conditions prior serialization. Defaults to True.

            `indent (int | None, optional):` Indentation to use in the JSON
            output. If None is passed, the output will be compact.

        #### Returns:
            `str:` JSON string with leading `@type` and `@version` tags.
        '''
        if validate_model:
            self.validate_model()
        body = json.loads(self.model_dump_json(exclude_none=exclude_none))
        doc = {'@type': self.__class__.__name__, '@version': SCHEMA_VERSION}
        doc.update(body)
        return json.dumps(doc, indent=indent, allow_nan=True)

    @classmethod
    def patchdyn_deserialize(cls,
                             data: str | dict[str, Any],
                             validate_model: bool = True):
        '''Deserialization of a versioned document produced by
        `patchdyn_serialize`. Mismatching `@version` tags are rejected.'''
        if isinstance(data, str):
            data = json.loads(data)
        elif not isinstance(data, dict):
            raise ValueError(f'data is of type {type(data)}, '
                             'alas it has to be either dict or str!')
        data = dict(data)
        check_schema_version(data.pop('@version', None))
        data.pop('@type', None)
        model = cls.model_validate(data)
        if validate_model:
            model.validate_model()
        return model

    def validate_model(self, raise_exc: bool = True) -> list:
        ''' Validates all attributes and invokes `validate_conditions`. The
            parameter `raise_exc` controls whether an exception should be
            thrown or a list with all encountered violations returned.
        '''
        try:
            self.__class__.model_validate(self.model_dump())
        except ValidationError as validation_error:
            if raise_exc:
                raise validation_error
            return [validation_error]
        return self.validate_conditions(raise_exc=raise_exc)

    def validate_conditions(self, raise_exc: bool = True) -> list:
        ''' Checks all registered conditions of this object including those
            registered on base classes.
        '''
        self_rep = object.__repr__(self)
        logging.debug('Checking conditions for %s ...', self_rep)
        exceptions = []
        for name, condition in get_conditions(self.__class__, BaseDataClass):
            if not condition(self):
                msg = f'Condition "{name}" for {repr(self)} failed!'
                logging.error(msg)
                exc = ConditionViolationError(msg)
                if raise_exc:
                    raise exc
                exceptions.append(exc)
            else:
                logging.debug('Condition %s for %s satisfied.', name,
                              self_rep)
        return exceptions


def check_schema_version(version: str | None) -> None:
    '''raises `SchemaVersionError` unless `version` is the current one'''
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(
            f'unsupported schema version {version!r}, '
            f'expected {SCHEMA_VERSION!r}')


def read_csv_header(lines) -> dict[str, str]:
    '''Parses the `# key: value` header lines of a patchdyn CSV file and
    checks the schema tag. Returns the header entries without the tag.'''
    header = {}
    for line in lines:
        if not line.startswith('#'):
            break
        key, _, value = line[1:].partition(':')
        header[key.strip()] = value.strip()
    check_schema_version(header.pop(CSV_SCHEMA_TAG[1:-1].strip(), None))
    return header

# EOF
