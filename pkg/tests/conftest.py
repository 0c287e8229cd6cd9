import os

import pytest
from hypothesis import HealthCheck, settings

from permadid import bbs
from permadid.did import DidResolver, create_document
from permadid.keys import AuthKeyPair
from permadid.protocol import Network
from permadid.weave import Weave

from . import acceptance_report

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def weave():
    return Weave()


@pytest.fixture
def resolver(weave):
    return DidResolver(weave)


class Issuer:
    def __init__(self, resolver, seed=None):
        self.auth = AuthKeyPair.generate()
        self.sk, self.pk = bbs.keygen(seed or os.urandom(32))
        self.doc = create_document([self.auth], bbs_keys=[self.pk])
        self.tx = resolver.publish(self.doc, self.auth)
        self.did = self.doc.id


class Holder:
    def __init__(self, resolver):
        self.auth = AuthKeyPair.generate()
        self.doc = create_document([self.auth])
        self.tx = resolver.publish(self.doc, self.auth)
        self.did = self.doc.id


@pytest.fixture
def parties(resolver):
    issuer, holder = Issuer(resolver), Holder(resolver)
    resolver.weave.mine_block()
    return issuer, holder


@pytest.fixture
def network():
    return Network()


def pytest_runtest_logreport(report):
    if report.failed:
        acceptance_report.FAILED_NODES.append(report.nodeid)


def pytest_terminal_summary(terminalreporter):
    if not acceptance_report.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance_report.summary_lines():
        terminalreporter.write_line(line)
