import shutil
import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    def build_extension(self, ext):
        source_dir = Path(__file__).resolve().parent
        build_dir = Path(self.build_temp) / "cmake"
        build_dir.mkdir(parents=True, exist_ok=True)
        out_dir = Path(self.get_ext_fullpath(ext.name)).resolve().parent

        configure = [
            "cmake",
            "-S",
            str(source_dir),
            "-B",
            str(build_dir),
            "-DCMAKE_BUILD_TYPE=Release",
            "-DLFGS_BUILD_CLI=OFF",
            "-DLFGS_BUILD_TESTS=OFF",
            f"-DPYTHON_EXECUTABLE={sys.executable}",
        ]
        subprocess.run(configure, check=True)
        subprocess.run(
            ["cmake", "--build", str(build_dir), "--target", "_core", "-j"],
            check=True,
        )

        built = list((build_dir / "python" / "lfgs").glob("_core*"))
        if not built:
            raise RuntimeError("cmake did not produce the extension module")
        out_dir.mkdir(parents=True, exist_ok=True)
        shutil.copy2(built[0], out_dir / built[0].name)


setup(
    ext_modules=[CMakeExtension("lfgs._core")],
    cmdclass={"build_ext": CMakeBuild},
)
