# -*- coding: utf-8 -*-
import json
import logging


class Report(object):
    """
    Result of a command: a JSON-serialisable ``data`` payload.

    :param dict data: report content
    """
    def __init__(self, data):
        self.data = data

    def to_json(self, **kwargs):
        return json.dumps(self.data, sort_keys=True, **kwargs)

    def write(self, path):
        with open(path, 'w') as fp:
            fp.write(self.to_json(indent=2))
            fp.write('\n')


class BaseComponent(object):

    __logger = None
    @property
    def logger(self):
        if self.__logger is None:
            self.__logger = logging.getLogger(self.__module__)
        return self.__logger
