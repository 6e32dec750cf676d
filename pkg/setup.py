from setuptools import setup, find_packages

setup(
    name="deformdenoise",
    version="0.1.0",
    packages=find_packages(include=["src", "src.*"]),
    install_requires=[
        "numpy>=1.24",
        "scipy>=1.10",
        "Pillow>=10.0",
        "prometheus_client>=0.16.0",
        "python-json-logger>=2.0.4",
    ],
    extras_require={"test": ["pytest>=7.0"]},
    entry_points={"console_scripts": ["deformdenoise = src.main:main"]},
    python_requires=">=3.9",
)
