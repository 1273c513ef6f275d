from setuptools import setup, find_packages

setup(name='proxgn-python',
      version='0.1',
      description='Proximal Gauss-Newton for penalized nonlinear least squares, with majorant-based convergence certificates',
      license='MIT',
      install_requires=['numpy', 'scipy'],
      extras_require={'test': ['pytest', 'hypothesis']},
      python_requires='>=3.7',
      include_package_data=True,
      packages=find_packages(exclude=['tests']),
      entry_points={'console_scripts': ['proxgn=proxgn_python.cli:main']}
      )
