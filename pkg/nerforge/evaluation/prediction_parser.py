import json

from nerforge.model import PredictionRecord, RawPrediction, nfc

_decoder = json.JSONDecoder()


def parse_prediction_output(raw_output: str) -> tuple[list[str], bool]:
    """
    Returns the mentions of the first JSON list of strings in the output and
    whether one was found. Prose around the list is ignored like in the
    annotation parser. Lists nested in an already decoded list are not
    candidates. Unparsable output is an empty extraction, never an error.
    """
    start = raw_output.find("[")
    while start >= 0:
        try:
            value, end = _decoder.raw_decode(raw_output, start)
        except json.JSONDecodeError:
            start = raw_output.find("[", start + 1)
            continue
        if isinstance(value, list) and all(isinstance(mention, str) for mention in value):
            return [nfc(mention) for mention in value], True
        start = raw_output.find("[", end)
    return [], False


def parse_prediction(prediction: RawPrediction) -> PredictionRecord:
    mentions, parse_ok = parse_prediction_output(prediction.raw_output)
    return PredictionRecord(
        prediction.record_id, nfc(prediction.entity_type), tuple(mentions), parse_ok
    )
