# -*- coding: utf-8 -*-
from unittest import TestCase
