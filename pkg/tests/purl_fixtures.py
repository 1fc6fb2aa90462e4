"""Shared purl fixture corpus and an independent reference canonicalizer."""

import re
from urllib.parse import quote, unquote

# 50 purls in canonical or near-canonical form, covering the common ecosystems,
# scoped names, qualifiers, subpaths and percent-encoding.
FIXTURE_PURLS = [
    "pkg:npm/dicer@0.3.0",
    "pkg:npm/dicer",
    "pkg:npm/multer@1.4.4",
    "pkg:npm/%40angular/core@16.2.0",
    "pkg:npm/%40babel/traverse@7.23.0",
    "pkg:npm/lodash@4.17.20?repository_url=https://registry.npmjs.org",
    "pkg:maven/org.apache.lucene/lucene-replicator@8.11.4",
    "pkg:maven/org.apache.lucene/lucene-replicator@9.12.0",
    "pkg:maven/org.apache.lucene/lucene-replicator",
    "pkg:maven/org.apache.logging.log4j/log4j-core@2.14.1?type=jar",
    "pkg:maven/com.fasterxml.jackson.core/jackson-databind@2.13.0?classifier=sources&type=jar",
    "pkg:maven/org.springframework/spring-core@5.3.20",
    "pkg:pypi/django@4.2.1",
    "pkg:pypi/requests@2.31.0",
    "pkg:pypi/typing-extensions@4.7.1",
    "pkg:pypi/pyyaml@6.0",
    "pkg:deb/debian/linux@6.11",
    "pkg:deb/debian/curl@7.74.0-1.3%2Bdeb11u7?arch=amd64&distro=debian-11",
    "pkg:deb/ubuntu/openssl@3.0.2-0ubuntu1.10?arch=amd64",
    "pkg:rpm/fedora/curl@7.50.3-1.fc25?arch=i386&distro=fedora-25",
    "pkg:rpm/opensuse/curl@7.56.1-1.1.?arch=i386&distro=opensuse-tumbleweed",
    "pkg:apk/alpine/busybox@1.36.1-r2?arch=x86_64",
    "pkg:golang/github.com/gorilla/context@234fd47e07d1004f0aed9c",
    "pkg:golang/google.golang.org/genproto#googleapis/api/annotations",
    "pkg:golang/golang.org/x/net@0.17.0",
    "pkg:cargo/rand@0.7.2",
    "pkg:cargo/serde@1.0.188",
    "pkg:gem/ruby-advisory-db-check@0.12.4",
    "pkg:gem/jruby-launcher@1.1.2?platform=java",
    "pkg:nuget/EnterpriseLibrary.Common@6.0.1304",
    "pkg:nuget/Newtonsoft.Json@13.0.1",
    "pkg:composer/laravel/laravel@5.5.0",
    "pkg:github/package-url/purl-spec@244fd47e07d1004",
    "pkg:github/package-url/purl-spec@244fd47e07d1004#everybody/loves/dogs",
    "pkg:bitbucket/birkenfeld/pygments-main@244fd47e07d1014f0aed9c",
    "pkg:docker/cassandra@latest",
    "pkg:docker/customer/dockerimage@sha256:244fd47e07d10?repository_url=gcr.io",
    "pkg:docker/smartentry/debian@dc437cc87d10",
    "pkg:hex/jason@1.1.2",
    "pkg:hex/acme/foo@2.3.",
    "pkg:pub/characters@1.2.0",
    "pkg:swift/github.com/Alamofire/Alamofire@5.4.3",
    "pkg:conan/openssl@3.0.3",
    "pkg:conda/absl-py@0.4.1?build=py36h06a4308_0&channel=main&subdir=linux-64&type=tar.bz2",
    "pkg:cocoapods/AFNetworking@4.0.1",
    "pkg:hackage/3d-graphics-examples@0.0.0.2",
    "pkg:huggingface/distilbert-base-uncased@043235d6088ecd3dd5fb5ca3592b6913fd516027",
    "pkg:generic/openssl@1.1.10g?download_url=https://openssl.org/source/openssl-1.1.0g.tar.gz",
    "pkg:generic/bitwarderl?vcs_url=git%2Bhttps://git.fsfe.org/dxtr/bitwarderl%40cc55108da32",
    "pkg:oci/debian@sha256:244fd47e07d10?arch=amd64&repository_url=docker.io/library/debian",
]

_LOWER_NS = {"github", "bitbucket", "composer", "deb", "apk"}
_LOWER_NAME = _LOWER_NS | {"pypi"}


def _enc(s):
    return quote(s, safe="").replace("%3A", ":")


def reference_canonicalize(text):
    """Regex-driven canonicalizer, kept deliberately separate from the package."""
    m = re.fullmatch(
        r"(?i:pkg):/*(?P<type>[^/?#]+)/(?P<path>[^?#]*?)/*(?:\?(?P<q>[^#]*))?(?:#(?P<sub>.*))?",
        text,
    )
    if not m:
        raise ValueError(text)
    ptype = m["type"].lower()
    segs = [s for s in m["path"].split("/") if s]
    last = segs.pop()
    m2 = re.fullmatch(r"(?P<name>[^@]+)(?:@(?P<ver>.*))?", last)
    name, ver = unquote(m2["name"]), m2["ver"]
    ns = [unquote(s) for s in segs]
    if ptype in _LOWER_NS:
        ns = [s.lower() for s in ns]
    if ptype in _LOWER_NAME:
        name = name.lower()
    if ptype == "pypi":
        name = name.replace("_", "-")
    out = "pkg:" + ptype + "/" + "".join(_enc(s) + "/" for s in ns) + _enc(name)
    if ver:
        out += "@" + _enc(unquote(ver))
    if m["q"]:
        pairs = {}
        for pair in m["q"].split("&"):
            k, _, v = pair.partition("=")
            if unquote(v):
                pairs[k.lower()] = unquote(v)
        if pairs:
            out += "?" + "&".join(f"{k}={_enc(v)}" for k, v in sorted(pairs.items()))
    if m["sub"]:
        sub = [unquote(s) for s in m["sub"].split("/") if s not in ("", ".", "..")]
        if sub:
            out += "#" + "/".join(_enc(s) for s in sub)
    return out
