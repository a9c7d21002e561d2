#include <iostream>
using namespace std;

int main() {
    int a, b, c;
    cin >> a >> b >> c;
    int *p = nullptr;
    if (a < b) *p = c;
    return 1;
}
