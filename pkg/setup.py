#!/usr/bin/env python
import os
from setuptools import setup, find_packages

VERSION_FILE_NAME = os.path.join(
    os.path.sep.join(
        os.path.abspath(__file__).split(os.path.sep)[:-1]),
    'VERSION')

with open(VERSION_FILE_NAME, 'r') as version_file:
    VERSION = version_file.readline().strip()

PACKAGES = find_packages(exclude=['tests', 'examples*'])

# Example parameter files
DATA_FILES = [('', ['VERSION'])]
for root, subfolders, files in os.walk('input'):
    DATA_FILES.append((
        root, [os.path.join(root, elem) for elem in files]))

setup(name='netburst',
      version=VERSION,
      description='Event-centric forecasting of bursty network telemetry',
      packages=PACKAGES,
      python_requires='>=3.8',
      install_requires=['numpy>=1.22',
                        'scipy>=1.7',
                        'scikit-learn>=1.0',
                        'torch>=1.12'],
      extras_require={'test': ['pytest']},
      entry_points={'console_scripts': [
          'netburst = netburst.NetBurst:main']},
      classifiers=['Programming Language :: Python',
                   'Programming Language :: Python :: 3',
                   'License :: OSI Approved :: MIT License',
                   'Operating System :: Unix',
                   'Development Status :: 3 - Alpha',
                   'Environment :: Console',
                   'Intended Audience :: Science/Research', ],
      data_files=DATA_FILES,
      )
