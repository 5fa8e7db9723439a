"""Eccezioni e report di validazione condivisi dai servizi."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, List, Optional


class _ReportedError(ValueError):
    """Errore di validazione che conserva il report completo, se disponibile."""

    def __init__(self, message: str, *, report: Optional[ValidationReport] = None) -> None:
        super().__init__(message)
        self.report = report


class FanError(_ReportedError):
    """Ventaglio non valido o non interpretabile."""


class SheafError(_ReportedError):
    """Fascio (funtore) che viola gli invarianti richiesti."""


class CoverError(ValueError):
    """Dati di rivestimento di Kummer non ammissibili."""


class CategoryMismatchError(ValueError):
    """Operazione tra oggetti definiti su categorie diverse."""


class FormatError(ValueError):
    """Errore di formato nei file JSON, con indicazione di riga o campo."""

    def __init__(self, message: str, *, line: Optional[int] = None, column: Optional[int] = None,
                 field_path: Optional[str] = None) -> None:
        location = []
        if line is not None:
            location.append(f'riga {line}')
        if column is not None:
            location.append(f'colonna {column}')
        if field_path:
            location.append(f'campo {field_path}')
        suffix = f" ({', '.join(location)})" if location else ''
        super().__init__(f'{message}{suffix}')
        self.line = line
        self.column = column
        self.field_path = field_path


class SearchBudgetExceeded(RuntimeError):
    """La ricerca esaustiva ha superato il numero massimo di candidati."""


class PropertyCheckFailed(RuntimeError):
    """Una verifica di proprietà (oracolo, aggiunzione, ...) è fallita."""


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    subject: Any = None


@dataclass
class ValidationReport:
    """Esito di una validazione: non solleva mai eccezioni, elenca le violazioni."""

    violations: List[Violation] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def add(self, code: str, message: str, subject: Any = None) -> None:
        self.violations.append(Violation(code, message, subject))

    def first(self) -> Optional[Violation]:
        return self.violations[0] if self.violations else None

    def codes(self) -> List[str]:
        return [violation.code for violation in self.violations]

    def to_dict(self) -> dict:
        return {
            'valid': self.valid,
            'violations': [
                {'code': v.code, 'message': v.message, 'subject': _jsonable(v.subject)}
                for v in self.violations
            ],
        }


def _jsonable(value: Any) -> Any:
    if isinstance(value, (list, tuple, set, frozenset)):
        items = sorted(value, key=repr) if isinstance(value, (set, frozenset)) else value
        return [_jsonable(item) for item in items]
    if isinstance(value, dict):
        return {str(key): _jsonable(item) for key, item in value.items()}
    return value


__all__ = [
    'CategoryMismatchError',
    'CoverError',
    'FanError',
    'FormatError',
    'PropertyCheckFailed',
    'SearchBudgetExceeded',
    'SheafError',
    'ValidationReport',
    'Violation',
]
