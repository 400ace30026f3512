import logging

import pytest
from _pytest.logging import caplog as _caplog
from loguru import logger

from core.fixtures import write_fixtures
from core.nnref import RecognizerNet, SeparatorNet, TranscriberNet, init_weights
from core.taxonomy import InstrumentTaxonomy, default_taxonomy

SMALL_ENCODER = (4, 4, 8, 8, 8, 8)
SMALL_DECODER = (8, 8, 8, 8, 4, 4)
SMALL_RECOGNIZER = dict(channels=(4, 4, 8, 8, 16, 16), d_model=16, n_heads=2, ffn_dim=32, n_layers=1)
SMALL_TRANSCRIBER = dict(channels=(4, 4, 8, 8), hidden=16, gru_hidden=8)


@pytest.fixture
def caplog(_caplog):
    class PropogateHandler(logging.Handler):
        def emit(self, record):
            logging.getLogger(record.name).handle(record)

    handler_id = logger.add(PropogateHandler(), format="{message}")
    yield _caplog
    logger.remove(handler_id)


@pytest.fixture(scope="session")
def taxonomy() -> InstrumentTaxonomy:
    return default_taxonomy()


@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("fixtures")
    write_fixtures(out)
    return out


@pytest.fixture
def small_recognizer() -> RecognizerNet:
    return init_weights(RecognizerNet(**SMALL_RECOGNIZER), seed=2)


@pytest.fixture
def small_transcriber() -> TranscriberNet:
    return init_weights(TranscriberNet(**SMALL_TRANSCRIBER), seed=3)


@pytest.fixture(params=["sum", "concat"])
def small_separator(request) -> SeparatorNet:
    net = SeparatorNet(merge=request.param, encoder_channels=SMALL_ENCODER, decoder_channels=SMALL_DECODER)
    return init_weights(net, seed=5)
