# -*- coding: utf-8 -*-
import json
import os
from tempfile import TemporaryDirectory

from tests import TestCase

from hinet import base


class ReportTestCase(TestCase):
    def test_to_json(self):
        report = base.Report({'b': 1, 'a': [1.5, None]})
        self.assertEqual('{"a": [1.5, null], "b": 1}', report.to_json())

    def test_write(self):
        with TemporaryDirectory() as folder:
            path = os.path.join(folder, 'report.json')
            base.Report({'passed': True}).write(path)
            with open(path) as fp:
                self.assertEqual({'passed': True}, json.load(fp))


class BaseComponentTestCase(TestCase):
    def test_logger_named_after_module(self):
        component = base.BaseComponent()
        self.assertEqual('hinet.base', component.logger.name)
        self.assertIs(component.logger, component.logger)
