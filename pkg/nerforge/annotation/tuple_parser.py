from enum import Enum

from nerforge.model import AnnotationKind, EntityAnnotation, InvariantError, nfc


class MalformedReason(Enum):
    NoList = "NoList"
    UnbalancedBrackets = "UnbalancedBrackets"
    NonTupleElement = "NonTupleElement"
    ArityNot2 = "ArityNot2"
    EmptyField = "EmptyField"
    Transport = "Transport"


class MalformedOutput(Exception):
    def __init__(self, reason: MalformedReason, detail: str) -> None:
        super().__init__(reason.value + ": " + detail)
        self.reason = reason
        self.detail = detail


_escapes = {"n": "\n", "t": "\t", "r": "\r"}

_quotes = "\"'"


class _TupleListScanner:
    """
    Recursive descent parser for the output format of the construction prompt:

        list   := '[' ( tuple ( ',' tuple )* ','? )? ']'
        tuple  := '(' string ( ',' string )* ','? ')'
        string := '"' chars '"' | "'" chars "'"

    Everything before the first '[' and after the matching ']' is prose and ignored.
    """

    def __init__(self, text: str) -> None:
        self.text = text
        self.pos = 0

    def _peek(self) -> str:
        if self.pos >= len(self.text):
            return ""
        return self.text[self.pos]

    def _skip_whitespace(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def _fail(self, reason: MalformedReason, detail: str) -> MalformedOutput:
        return MalformedOutput(reason, f"{detail} at offset {self.pos}")

    def parse(self) -> list[tuple[str, str]]:
        start = self.text.find("[")
        if start < 0:
            raise MalformedOutput(MalformedReason.NoList, "no opening bracket")
        self.pos = start + 1
        result: list[tuple[str, str]] = []
        self._skip_whitespace()
        if self._peek() == "]":
            return result
        while True:
            result.append(self._tuple())
            self._skip_whitespace()
            c = self._peek()
            if c == ",":
                self.pos += 1
                self._skip_whitespace()
                if self._peek() == "]":
                    return result
                continue
            if c == "]":
                return result
            if c in ("", ")"):
                raise self._fail(MalformedReason.UnbalancedBrackets, "list is not closed")
            raise self._fail(MalformedReason.NonTupleElement, f"unexpected {c!r} between tuples")

    def _tuple(self) -> tuple[str, str]:
        c = self._peek()
        if c in ("", "]", ")"):
            raise self._fail(MalformedReason.UnbalancedBrackets, "expected a tuple")
        if c != "(":
            raise self._fail(MalformedReason.NonTupleElement, "element is not a tuple")
        self.pos += 1
        fields: list[str] = []
        self._skip_whitespace()
        if self._peek() == ")":
            self.pos += 1
            raise self._fail(MalformedReason.ArityNot2, "empty tuple")
        while True:
            self._skip_whitespace()
            c = self._peek()
            if c in ("", "]", ")"):
                raise self._fail(MalformedReason.UnbalancedBrackets, "tuple is not closed")
            if c not in _quotes:
                raise self._fail(MalformedReason.NonTupleElement, "tuple field is not quoted")
            fields.append(self._string())
            self._skip_whitespace()
            c = self._peek()
            if c == ",":
                self.pos += 1
                self._skip_whitespace()
                if self._peek() == ")":
                    self.pos += 1
                    break
                continue
            if c == ")":
                self.pos += 1
                break
            if c in ("", "]"):
                raise self._fail(MalformedReason.UnbalancedBrackets, "tuple is not closed")
            raise self._fail(MalformedReason.NonTupleElement, f"unexpected {c!r} in tuple")
        if len(fields) != 2:
            raise self._fail(MalformedReason.ArityNot2, f"tuple has {len(fields)} fields")
        if not fields[0].strip() or not fields[1].strip():
            raise self._fail(MalformedReason.EmptyField, "tuple has an empty field")
        return fields[0], fields[1]

    def _string(self) -> str:
        quote = self.text[self.pos]
        self.pos += 1
        chars = []
        while self.pos < len(self.text):
            c = self.text[self.pos]
            if c == "\\" and self.pos + 1 < len(self.text):
                escaped = self.text[self.pos + 1]
                chars.append(_escapes.get(escaped, escaped))
                self.pos += 2
                continue
            if c == quote:
                self.pos += 1
                return "".join(chars)
            chars.append(c)
            self.pos += 1
        raise self._fail(MalformedReason.UnbalancedBrackets, "string is not terminated")


def parse_tuples(response_text: str) -> list[tuple[str, str]]:
    """Raises MalformedOutput, order and duplicates of the tuples are preserved."""
    return _TupleListScanner(response_text).parse()


def parse_tuple_list(
    response_text: str, kind: AnnotationKind = AnnotationKind.TypeName
) -> list[EntityAnnotation]:
    result = []
    for mention, entity_type in parse_tuples(response_text):
        try:
            result.append(EntityAnnotation(nfc(mention), nfc(entity_type), kind))
        except InvariantError as e:
            raise MalformedOutput(MalformedReason.EmptyField, str(e)) from None
    return result
